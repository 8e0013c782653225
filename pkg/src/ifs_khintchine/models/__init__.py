"""
Data models for IFS values, algebraic points and results.
"""

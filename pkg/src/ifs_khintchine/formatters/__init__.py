"""
Output formatters for result tables.
"""

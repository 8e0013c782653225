"""
IFS Khintchine - computational Diophantine approximation on 1-D fractals.
"""

__version__ = '0.1.0'

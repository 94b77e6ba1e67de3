"""Time-variant fog simulation and correlation defogging toolkit"""

__version__ = '1.0.0'

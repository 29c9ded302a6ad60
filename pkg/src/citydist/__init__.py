"""Cost modeling and optimization of multi-echelon urban freight schemes."""

__version__ = "0.1.0"

"""
Quasiprobability channel decomposition with pre- and post-selection.
"""

__all__ = ["__version__"]
__version__ = "0.1.0"

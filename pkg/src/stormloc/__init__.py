"""Storm-center localization from gridded wind fields with noisy labels."""

__version__ = "0.1.0"

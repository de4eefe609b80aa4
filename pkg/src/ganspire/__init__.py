"""UI design inspiration pipeline built on a style-based GAN."""

__version__ = "0.1.0"

"""F-DNS perceptual image hashing."""

__version__ = "0.1.0"

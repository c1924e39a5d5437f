"""Streaming joint punctuation prediction and disfluency detection."""

__version__ = "0.1.0"

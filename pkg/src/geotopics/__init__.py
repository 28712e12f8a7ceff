"""Region-level outcome prediction from geotagged short-text corpora."""

__version__ = "0.1.0"

"""lares: linear-attention image restoration and texture-complexity dataset curation."""

__version__ = "0.1.0"

"""mergeweave: token-level three-way program merge toolkit."""

__version__ = "0.1.0"

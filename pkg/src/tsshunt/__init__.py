"""Discovery and analysis of technical support scams reached through search results and ads."""

__version__ = "0.1.0"

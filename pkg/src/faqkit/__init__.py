"""FAQ retrieval and customer-service NLP toolkit."""

__version__ = "0.1.0"

"""F-measure oriented logistic regression via relative density-ratio weights."""

__version__ = "0.1.0"

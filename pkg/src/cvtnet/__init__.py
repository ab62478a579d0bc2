"""Copula-based path attribution for small ReLU/softmax classifiers."""

__version__ = "0.1.0"

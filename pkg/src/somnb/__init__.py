"""Cluster regional GDP sector rows with a self-organizing map, learn the
clusters with Gaussian naive Bayes, and compare the result with Klassen
typology quadrants."""

__version__ = "0.1.0"

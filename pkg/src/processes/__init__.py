"""Gaussian and Rademacher processes and hull optimization."""

"""Bound functionals, fixed points and certificates."""

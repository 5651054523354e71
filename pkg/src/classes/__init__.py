"""Sampled function classes, nets and synthetic generators."""

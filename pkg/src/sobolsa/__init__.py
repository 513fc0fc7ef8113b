"""Variance-based global sensitivity analysis."""

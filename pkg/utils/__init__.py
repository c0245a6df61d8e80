"""Fourier machinery, special functions and error types."""

"""Solver settings and output constants."""

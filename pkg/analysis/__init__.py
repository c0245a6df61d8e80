"""Stability analysis, verification suites and plotting."""

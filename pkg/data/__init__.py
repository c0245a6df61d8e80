"""Branch CSV/JSON persistence."""

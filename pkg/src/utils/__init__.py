"""Output directory and file helpers."""

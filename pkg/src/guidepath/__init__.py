"""Roadmap planning and landmark-based output-feedback controller synthesis."""

__version__ = "0.1.0"

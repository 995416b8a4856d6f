"""Proactive procedural-task assistant: engine, simulator, datasets, evaluation."""

__version__ = "0.1.0"

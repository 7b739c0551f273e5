"""Fidelity-aware VQA execution engine with qubit-walk circuit mapping."""

__version__ = "1.0.0"

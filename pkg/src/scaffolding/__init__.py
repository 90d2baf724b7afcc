"""Scaffolding networks: a teacher-student RL reader for text reasoning."""

__version__ = "0.1.0"

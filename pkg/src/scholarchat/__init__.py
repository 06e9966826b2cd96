"""Conversational agent for scholarly questions: papers, conferences, people, news."""

__version__ = "0.1.0"

"""Deterministic multi-modal traffic-hub simulator with a guided
access-barrier tour, a headless core, and a websocket walkthrough gateway."""

__version__ = "0.1.0"

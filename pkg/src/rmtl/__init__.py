"""Simulator and verification harness for memristor threshold-logic gates."""

__version__ = "0.1.0"

"""Exact simulation of random multiparty entanglement distillation on few-qubit pure states."""

__version__ = "0.1.0"

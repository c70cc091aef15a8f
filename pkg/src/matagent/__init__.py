"""LLM-driven workflow agent for VASP-style materials calculations, with a
simulated backend and the benchmark scoring harness."""

__version__ = "0.1.0"

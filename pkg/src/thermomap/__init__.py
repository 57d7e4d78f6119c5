"""Thermal-aware mapping of SNN workloads onto crossbar-based neuromorphic hardware."""

__version__ = "0.1.0"

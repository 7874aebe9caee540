"""Unitary-channel certification: simulators, samplers and bound calculators."""

__version__ = "0.1.0"

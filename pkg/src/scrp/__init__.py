"""Simultaneous cross-resonance parity gates: modelling, calibration and benchmarking."""

"""Optimal feedback control of a continuously measured quantum oscillator."""

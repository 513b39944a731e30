"""Appearance-side numerics: attention, division branches, BNNeck."""

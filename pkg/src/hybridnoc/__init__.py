"""Modelling toolkit for an 8x8 electronic mesh augmented with serpentine
nanophotonic express links: link power models, design-space exploration,
greedy link selection, cycle-level simulation and energy accounting."""

__version__ = "0.1.0"

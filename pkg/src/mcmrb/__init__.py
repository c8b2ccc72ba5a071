"""Mid-circuit measurement randomized benchmarking suite: simulation, fitting and classification."""

__version__ = "0.1.0"

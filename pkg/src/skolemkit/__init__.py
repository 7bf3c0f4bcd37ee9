"""skolemkit: SAT-oracle-driven synthesis and verification of Boolean
Skolem functions."""

__version__ = "0.1.0"

"""Numerical laboratory for generalized Stevic-Sharma operators from the
minimal Mobius invariant space into Zygmund-type spaces."""

__version__ = "0.1.0"

"""AC optimal power flow with disjoint prohibited operating zones."""

__version__ = "0.1.0"

"""Performance laboratory for attribute-based credentials on a twisted
Edwards curve, with a 1024-bit modular-exponentiation baseline scheme,
TCP issuer/verifier services, and a benchmark harness."""

__version__ = "0.1.0"

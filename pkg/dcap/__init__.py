"""
dcap: p-adic D-modules at finite precision.

Truncated Tate algebras, differential operators of bounded level, and the
de Rham, Kashiwara, pullback and duality functors, with strictness and
limit diagnostics over a ladder of degree caps.
"""

__version__ = "0.1.0"

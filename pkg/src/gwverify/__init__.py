"""Exact verifier for descendant Gromov-Witten correlator identities.

Computes psi-class intersection numbers on moduli of curves (all genera, via
the Virasoro/DVV recursion), genus-0 descendant invariants of P1 and P2
(reconstructed from primary seeds), and checks universal identities between
them as exact identities of rational numbers.
"""

from gwverify.model import (
    CorrelatorKey,
    Insertion,
    Rational,
    TargetModel,
    get_model,
    load_target,
    selection_rule,
)

__all__ = [
    "CorrelatorKey",
    "Insertion",
    "Rational",
    "TargetModel",
    "get_model",
    "load_target",
    "selection_rule",
]

__version__ = "0.1.0"

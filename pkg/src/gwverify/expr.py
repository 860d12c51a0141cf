"""Normal-form symbolic expressions on the big phase space.

A :class:`ScalarExpr` is a finite sum of terms

    rational coefficient x monomial in the shifted coordinates tt[n,a]
                         x product of correlator factors <tau_... ; g=h>

with terms merged on equal (monomial, factor multiset) signature.  A
:class:`VectorExpr` is a finite sum of scalar coefficients times coordinate
generators tau_k(gamma_a).  Brackets contract vector fields multilinearly
over their scalar coefficients (tensor semantics): the coefficients multiply
and are differentiated only by explicit outer ``differentiate`` calls.

Evaluation at the origin sends tt[1,1] to -1 and every other tt[n,a] to 0,
and turns each correlator factor into its exact per-degree value through the
point or target oracle.

The distinguished vector fields with infinitely many terms (string, dilaton,
grading) are carried with an explicit truncation level; differentiating past
the truncation raises rather than silently dropping terms.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from gwverify.model import (
    Insertion,
    QPoly,
    TargetModel,
    canonical_insertions,
    eta_inv_entries,
    euler_weights,
    format_rational,
)
from gwverify import point_oracle, target_oracle

ZERO = Fraction(0)
ONE = Fraction(1)


class TruncationError(RuntimeError):
    """A derivative reached past a field's truncation level."""


class CapabilityError(RuntimeError):
    """A correlator factor is outside the oracles' range."""


class CorrelatorFactor(NamedTuple):
    """A derivative of the genus-h generating function, slots canonical."""

    genus: int
    slots: tuple[Insertion, ...]

    def with_slot(self, ins: Insertion) -> "CorrelatorFactor":
        return CorrelatorFactor(self.genus, canonical_insertions(self.slots + (ins,)))

    def render(self) -> str:
        inner = " ".join(f"tau_{k}({a})" for k, a in self.slots)
        return f"<{inner};g={self.genus}>"


TMonomial = tuple[tuple[tuple[int, int], int], ...]
TermKey = tuple[TMonomial, tuple[CorrelatorFactor, ...]]

_EMPTY_MONO: TMonomial = ()


def _merge_trunc(*ts: Optional[int]) -> Optional[int]:
    present = [t for t in ts if t is not None]
    return min(present) if present else None


def _mono_mul(m1: TMonomial, m2: TMonomial) -> TMonomial:
    if not m1:
        return m2
    if not m2:
        return m1
    acc: dict[tuple[int, int], int] = dict(m1)
    for var, e in m2:
        acc[var] = acc.get(var, 0) + e
    return tuple(sorted(acc.items()))


class ScalarExpr:
    """Immutable normal-form scalar expression."""

    __slots__ = ("terms", "trunc")

    def __init__(self, terms: Optional[dict[TermKey, Fraction]] = None,
                 trunc: Optional[int] = None):
        self.terms: dict[TermKey, Fraction] = terms if terms is not None else {}
        self.trunc = trunc

    @staticmethod
    def zero() -> "ScalarExpr":
        return ScalarExpr({})

    @staticmethod
    def const(c: Fraction) -> "ScalarExpr":
        c = Fraction(c)
        return ScalarExpr({(_EMPTY_MONO, ()): c} if c != 0 else {})

    @staticmethod
    def one() -> "ScalarExpr":
        return ScalarExpr.const(ONE)

    @staticmethod
    def tt(n: int, a: int, coeff: Fraction = ONE) -> "ScalarExpr":
        """The shifted coordinate tt[n,a] = t[n,a] - delta(a,1)delta(n,1)."""
        return ScalarExpr({((((n, a), 1),), ()): Fraction(coeff)})

    @property
    def is_zero_expr(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarExpr) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "ScalarExpr") -> "ScalarExpr":
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, ZERO) + c
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
        return ScalarExpr(out, _merge_trunc(self.trunc, other.trunc))

    def __neg__(self) -> "ScalarExpr":
        return ScalarExpr({k: -c for k, c in self.terms.items()}, self.trunc)

    def __sub__(self, other: "ScalarExpr") -> "ScalarExpr":
        return self + (-other)

    def scale(self, c: Fraction) -> "ScalarExpr":
        if c == 0:
            return ScalarExpr({}, self.trunc)
        return ScalarExpr({k: c * v for k, v in self.terms.items()}, self.trunc)

    def __mul__(self, other: "ScalarExpr") -> "ScalarExpr":
        out: dict[TermKey, Fraction] = {}
        for (m1, f1), c1 in self.terms.items():
            for (m2, f2), c2 in other.terms.items():
                key = (_mono_mul(m1, m2), tuple(sorted(f1 + f2)))
                s = out.get(key, ZERO) + c1 * c2
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return ScalarExpr(out, _merge_trunc(self.trunc, other.trunc))

    def attach_factor(self, f: CorrelatorFactor) -> "ScalarExpr":
        out: dict[TermKey, Fraction] = {}
        for (mono, factors), c in self.terms.items():
            key = (mono, tuple(sorted(factors + (f,))))
            s = out.get(key, ZERO) + c
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
        return ScalarExpr(out, self.trunc)

    def differentiate(self, n: int, a: int) -> "ScalarExpr":
        """Partial derivative w.r.t. t[n,a]: Leibniz over the monomial and
        over each correlator factor (which gains the insertion tau_n(a))."""
        if self.trunc is not None and n > self.trunc:
            raise TruncationError(
                f"derivative t[{n},{a}] exceeds field truncation level {self.trunc}")
        out: dict[TermKey, Fraction] = {}

        def put(key: TermKey, c: Fraction) -> None:
            s = out.get(key, ZERO) + c
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s

        ins = Insertion(n, a)
        for (mono, factors), c in self.terms.items():
            for i, (var, e) in enumerate(mono):
                if var == (n, a):
                    rest = mono[:i] + ((var, e - 1),) + mono[i + 1:] if e > 1 \
                        else mono[:i] + mono[i + 1:]
                    put((rest, factors), c * e)
            for i, f in enumerate(factors):
                nf = tuple(sorted(factors[:i] + (f.with_slot(ins),) + factors[i + 1:]))
                put((mono, nf), c)
        return ScalarExpr(out, self.trunc)

    def debug_str(self) -> str:
        """Stable text form: terms sorted, factors as <tau_k(a) ...;g=h>,
        monomials as tt[n,a]^e."""
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms):
            mono, factors = key
            bits = [format_rational(self.terms[key])]
            bits.extend(f"tt[{n},{a}]^{e}" for (n, a), e in mono)
            bits.extend(f.render() for f in factors)
            parts.append("*".join(bits))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"ScalarExpr({self.debug_str()})"


class VectorExpr:
    """Sum of scalar coefficients times coordinate generators tau_k(gamma_a)."""

    __slots__ = ("comps", "trunc")

    def __init__(self, comps: Optional[dict[Insertion, ScalarExpr]] = None,
                 trunc: Optional[int] = None):
        self.comps: dict[Insertion, ScalarExpr] = {}
        if comps:
            for gen, coeff in comps.items():
                if not coeff.is_zero_expr:
                    self.comps[gen] = coeff
        self.trunc = trunc

    @staticmethod
    def zero() -> "VectorExpr":
        return VectorExpr({})

    def __add__(self, other: "VectorExpr") -> "VectorExpr":
        out = dict(self.comps)
        for gen, coeff in other.comps.items():
            s = out.get(gen, ScalarExpr.zero()) + coeff
            if s.is_zero_expr:
                out.pop(gen, None)
            else:
                out[gen] = s
        return VectorExpr(out, _merge_trunc(self.trunc, other.trunc))

    def __neg__(self) -> "VectorExpr":
        return VectorExpr({g: -c for g, c in self.comps.items()}, self.trunc)

    def __sub__(self, other: "VectorExpr") -> "VectorExpr":
        return self + (-other)

    def scale(self, c) -> "VectorExpr":
        if isinstance(c, ScalarExpr):
            return VectorExpr({g: v * c for g, v in self.comps.items()},
                              _merge_trunc(self.trunc, c.trunc))
        return VectorExpr({g: v.scale(c) for g, v in self.comps.items()}, self.trunc)

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorExpr) and self.comps == other.comps

    def __repr__(self) -> str:
        inner = " | ".join(f"tau_{k}({a}): {c.debug_str()}" for (k, a), c in sorted(self.comps.items()))
        return f"VectorExpr({inner})"


def coord_field(k: int, a: int) -> VectorExpr:
    """The constant coordinate field tau_k(gamma_a)."""
    return VectorExpr({Insertion(k, a): ScalarExpr.one()})


def tau_plus(v: VectorExpr, shift: int = 1) -> VectorExpr:
    """Raise every generator level by ``shift``; coefficients untouched."""
    return VectorExpr({Insertion(k + shift, a): c for (k, a), c in v.comps.items()},
                      v.trunc)


def bracket(g: int, fields: Sequence[VectorExpr]) -> ScalarExpr:
    """Multilinear genus-g contraction of vector fields: coefficients
    multiply, generators merge into one correlator factor."""
    assert len(fields) >= 1, "bracket needs at least one field"
    trunc = _merge_trunc(*(f.trunc for f in fields))
    total = ScalarExpr({}, trunc)
    for combo in itertools.product(*(list(f.comps.items()) for f in fields)):
        gens = canonical_insertions(tuple(gen for gen, _ in combo))
        coeff = ScalarExpr.one()
        for _, c in combo:
            coeff = coeff * c
        total = total + coeff.attach_factor(CorrelatorFactor(g, gens))
    return ScalarExpr(total.terms, trunc)


def apply_T(v: VectorExpr, model: TargetModel) -> VectorExpr:
    """The two-point-subtracted shift: raise levels by one, then subtract,
    for each basis class, the genus-0 two-slot coefficient times tau_0."""
    out = tau_plus(v)
    for a, b, c in eta_inv_entries(model):
        coeff = bracket(0, [v, coord_field(0, b)]).scale(c)
        out = out - VectorExpr({Insertion(0, a): coeff}, coeff.trunc)
    return out


def apply_T_power(v: VectorExpr, k: int, model: TargetModel) -> VectorExpr:
    for _ in range(k):
        v = apply_T(v, model)
    return v


def qprod(v1: VectorExpr, v2: VectorExpr, model: TargetModel) -> VectorExpr:
    """Quantum product: the genus-0 three-slot coefficient times tau_0."""
    out = VectorExpr.zero()
    for a, b, c in eta_inv_entries(model):
        coeff = bracket(0, [v1, v2, coord_field(0, b)]).scale(c)
        out = out + VectorExpr({Insertion(0, a): coeff}, coeff.trunc)
    return out


def delta_field(model: TargetModel) -> VectorExpr:
    """The basis contraction of the quantum product with itself."""
    out = VectorExpr.zero()
    for a, b, c in eta_inv_entries(model):
        out = out + qprod(coord_field(0, b), coord_field(0, a), model).scale(c)
    return out


def shifted_string_field(model: TargetModel, shift: int, trunc: int) -> VectorExpr:
    """-sum over n of tt[n,a] tau_{n+shift-1}(gamma_a), truncated at
    coordinate level trunc.  Generators of negative level are dropped after
    the shift, so for shift > 0 the n = 0 coordinates survive; this is not
    the same field as a level-raise of the unshifted sum."""
    if trunc < 1:
        raise ValueError("truncation level must be >= 1")
    comps = {}
    for n in range(0, trunc + 1):
        if n + shift - 1 < 0:
            continue
        for a in range(1, model.n_classes + 1):
            comps[Insertion(n + shift - 1, a)] = ScalarExpr.tt(n, a, Fraction(-1))
    return VectorExpr(comps, trunc)


def string_field(model: TargetModel, trunc: int) -> VectorExpr:
    """-sum tt[n,a] tau_{n-1}(gamma_a), truncated at coordinate level trunc."""
    return shifted_string_field(model, 0, trunc)


def dilaton_field(model: TargetModel, trunc: int) -> VectorExpr:
    """-sum tt[n,a] tau_n(gamma_a), truncated at coordinate level trunc."""
    if trunc < 1:
        raise ValueError("truncation level must be >= 1")
    comps = {}
    for n in range(0, trunc + 1):
        for a in range(1, model.n_classes + 1):
            comps[Insertion(n, a)] = ScalarExpr.tt(n, a, Fraction(-1))
    return VectorExpr(comps, trunc)


def euler_field(model: TargetModel, trunc: int) -> VectorExpr:
    """The grading field: -sum (n + b_a - (3-dim)/2) tt[n,a] tau_n(gamma_a)
    minus the first-Chern shift term."""
    if trunc < 1:
        raise ValueError("truncation level must be >= 1")
    bs, cmat = euler_weights(model)
    shift = Fraction(3 - model.dim, 2)
    out = VectorExpr.zero()
    for n in range(0, trunc + 1):
        for a in range(1, model.n_classes + 1):
            w = -(n + bs[a - 1] - shift)
            if w != 0:
                out = out + VectorExpr({Insertion(n, a): ScalarExpr.tt(n, a, w)})
            if n >= 1:
                for b in range(1, model.n_classes + 1):
                    c = cmat[a - 1][b - 1]
                    if c != 0:
                        out = out + VectorExpr(
                            {Insertion(n - 1, b): ScalarExpr.tt(n, a, -c)})
    return VectorExpr(out.comps, trunc)


def tau_power(v: VectorExpr, k: int) -> VectorExpr:
    """tau_k as iterated level shift (coefficients untouched)."""
    return tau_plus(v, k)


def factor_qpoly(model: TargetModel, f: CorrelatorFactor, cutoff: int,
                  max_genus: int) -> QPoly:
    if model.is_point:
        levels = tuple(k for k, _ in f.slots)
        val = point_oracle.psi_correlator(f.genus, levels, max_genus=max_genus)
        return QPoly((val,) + (ZERO,) * cutoff)
    if f.genus != 0:
        raise CapabilityError(
            f"genus-{f.genus} correlators are not available for target {model.name}")
    return QPoly(tuple(target_oracle.descendant_g0(model, d, f.slots)
                       for d in range(cutoff + 1)))


def evaluate_with_stats(e: ScalarExpr, model: TargetModel, cutoff: int,
                        max_genus: int = point_oracle.DEFAULT_MAX_GENUS) -> tuple[QPoly, int]:
    """Origin evaluation: returns (per-degree value, count of expression
    terms whose contribution is nonzero in some degree)."""
    if cutoff > model.maxdeg:
        raise target_oracle.DegreeCutoffError(
            f"cutoff {cutoff} above model cutoff {model.maxdeg}")
    total = QPoly.zero(cutoff)
    nonzero_terms = 0
    for (mono, factors), coeff in e.terms.items():
        c = coeff
        for (n, a), exp in mono:
            if (n, a) == (1, 1):
                c *= (-1) ** exp
            else:
                c = ZERO
                break
        if c == 0:
            continue
        poly = QPoly.const(c, cutoff)
        for f in factors:
            poly = poly * factor_qpoly(model, f, cutoff, max_genus)
            if poly.is_zero:
                break
        if not poly.is_zero:
            nonzero_terms += 1
            total = total + poly
    return total, nonzero_terms


def evaluate(e: ScalarExpr, model: TargetModel, cutoff: int,
             max_genus: int = point_oracle.DEFAULT_MAX_GENUS) -> QPoly:
    """Evaluate a scalar expression at the origin, per degree up to cutoff."""
    return evaluate_with_stats(e, model, cutoff, max_genus)[0]


def evaluate_vector(v: VectorExpr, model: TargetModel, cutoff: int) -> dict[Insertion, QPoly]:
    """Origin-evaluate each generator coefficient of a vector field."""
    out = {}
    for gen, coeff in sorted(v.comps.items()):
        val = evaluate(coeff, model, cutoff)
        if not val.is_zero:
            out[gen] = val
    return out


def differentiate(e: ScalarExpr, n: int, a: int) -> ScalarExpr:
    """Module-level alias for :meth:`ScalarExpr.differentiate`."""
    return e.differentiate(n, a)


def apply_battery(e: ScalarExpr, battery: Sequence[Insertion]) -> ScalarExpr:
    """Apply a list of derivative insertions in canonical order."""
    for n, a in canonical_insertions(battery):
        e = e.differentiate(n, a)
    return e

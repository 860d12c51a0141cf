"""Genus-0 descendant invariants of P1 and P2 at the origin, per degree.

Everything is reconstructed from the primary seed (one degree-1 two-point
invariant) by exact recursion:

* degree 0 factorizes over constant maps into a cup integral times a
  psi-monomial integral from the point oracle;
* level-0 identity / dilaton / divisor insertions are stripped by the string,
  dilaton and divisor equations;
* a highest descendant on a correlator with >= 3 insertions is lowered by the
  genus-0 recursion relation (two-point function times one-fewer-descendant
  correlator, summed over degree splits and the pairing);
* correlators with < 3 insertions are raised to 3 insertions by the divisor
  equation read backwards, then lowered as above;
* what remains is the primary table: rational-curve counts N_d satisfying the
  quadratic WDVV recursion seeded by N_1 = 1.

All values are memoized per model.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from gwverify.combinat import sub_multisets
from gwverify.model import (
    CorrelatorKey,
    Insertion,
    TargetModel,
    canonical_insertions,
    eta_inv_entries,
    selection_rule,
)
from gwverify.point_oracle import psi_correlator

ZERO = Fraction(0)
ONE = Fraction(1)


class NoOracleError(RuntimeError):
    """The model is outside the reconstructible family (no value promised)."""


class DegreeCutoffError(ValueError):
    """Requested degree exceeds the model's cutoff."""


_memo: dict[tuple[TargetModel, int, tuple[Insertion, ...]], Fraction] = {}
_staged: dict[tuple[str, int, tuple[Insertion, ...]], Fraction] = {}
_nd_memo: dict[tuple[Fraction, int], Fraction] = {}


def rational_curve_count(d: int, n1: Fraction = ONE) -> Fraction:
    """Degree-d rational plane curves through 3d-1 points, from the WDVV
    quadratic recursion with N_1 = n1."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    if d == 1:
        return n1
    key = (n1, d)
    hit = _nd_memo.get(key)
    if hit is not None:
        return hit
    total = ZERO
    for d1 in range(1, d):
        d2 = d - d1
        total += (rational_curve_count(d1, n1) * rational_curve_count(d2, n1)
                  * d1 ** 2 * d2
                  * (d2 * math.comb(3 * d - 4, 3 * d1 - 2)
                     - d1 * math.comb(3 * d - 4, 3 * d1 - 1)))
    _nd_memo[key] = total
    return total


def constant_maps_g0(model: TargetModel, insertions) -> Fraction:
    """Degree-0 factorization: cup integral of the classes times the
    psi-monomial integral on the moduli of pointed rational curves."""
    ins = canonical_insertions(insertions)
    if len(ins) < 3:
        raise ValueError("degree-0 correlators need at least 3 insertions")
    cup = model.cup_integral([i.cls for i in ins])
    if cup == 0:
        return ZERO
    return cup * psi_correlator(0, tuple(i.level for i in ins))


def descendant_g0(model: TargetModel, d: int, insertions) -> Fraction:
    """Exact genus-0 degree-d descendant invariant at the origin."""
    ins = canonical_insertions(insertions)
    if d > model.maxdeg:
        raise DegreeCutoffError(f"degree {d} above model cutoff {model.maxdeg}")
    if not selection_rule(model, CorrelatorKey(0, d, ins)):
        return ZERO
    key = (model, d, ins)
    hit = _memo.get(key)
    if hit is not None:
        return hit
    staged = _staged.pop((model.name, d, ins), None)
    if staged is not None:
        _memo[key] = staged
        return staged
    val = _reduce(model, d, ins)
    _memo[key] = val
    return val


def two_point_g0(model: TargetModel, d: int, ins1, ins2) -> Fraction:
    """Genus-0 two-point descendant invariant (vanishes at degree 0)."""
    if d == 0:
        return ZERO
    return descendant_g0(model, d, (tuple(ins1), tuple(ins2)))


def primary_3pt(model: TargetModel, d: int, classes: Sequence[int]) -> Fraction:
    """Primary (no-descendant) 3-point invariant at degree d."""
    a, b, c = classes
    return descendant_g0(model, d, ((0, a), (0, b), (0, c)))


def _reduce(model: TargetModel, d: int, ins: tuple[Insertion, ...]) -> Fraction:
    if d == 0:
        return constant_maps_g0(model, ins)

    div = model.divisor_idx

    # string equation: a level-0 identity insertion lowers one level elsewhere
    for j, (k, a) in enumerate(ins):
        if k == 0 and a == 1:
            rest = ins[:j] + ins[j + 1:]
            total = ZERO
            for i, (ki, ai) in enumerate(rest):
                if ki >= 1:
                    total += descendant_g0(model, d, rest[:i] + ((ki - 1, ai),) + rest[i + 1:])
            return total

    # dilaton equation
    for j, (k, a) in enumerate(ins):
        if k == 1 and a == 1:
            rest = ins[:j] + ins[j + 1:]
            return (len(rest) - 2) * descendant_g0(model, d, rest)

    # divisor equation, forward: strip a level-0 divisor insertion
    if div is not None:
        for j, (k, a) in enumerate(ins):
            if k == 0 and a == div:
                rest = ins[:j] + ins[j + 1:]
                return d * descendant_g0(model, d, rest) + _divisor_corrections(model, d, rest)

    max_level = max((i.level for i in ins), default=0)
    if max_level == 0:
        return _primary_value(model, d, ins)
    if len(ins) >= 3:
        return _trr_step(model, d, ins)
    return _raise_points(model, d, ins)


def _divisor_corrections(model: TargetModel, d: int, rest: tuple[Insertion, ...]) -> Fraction:
    """Sum over slots of the divisor-cup correction with one level lowered."""
    total = ZERO
    for i, (ki, ai) in enumerate(rest):
        if ki >= 1:
            for b, coeff in model.divisor_cup(ai):
                total += coeff * descendant_g0(model, d, rest[:i] + ((ki - 1, b),) + rest[i + 1:])
    return total


def _raise_points(model: TargetModel, d: int, ins: tuple[Insertion, ...]) -> Fraction:
    """Evaluate an n<3 key by inserting divisor classes until the descendant
    recursion applies; the inserted copies are consumed directly by the
    recursion step, never re-stripped."""
    div = model.divisor_idx
    if div is None:
        raise NoOracleError(f"cannot reconstruct {ins} at degree {d} for model {model.name}")
    corrections = _divisor_corrections(model, d, ins)
    bumped = canonical_insertions(ins + ((0, div),))
    if len(bumped) >= 3:
        top = _trr_step(model, d, bumped)
    else:
        top = _raise_points(model, d, bumped)
    return (top - corrections) / d


def _trr_step(model: TargetModel, d: int, ins: tuple[Insertion, ...]) -> Fraction:
    """Lower the highest descendant: the correlator equals a degree- and
    slot-split sum of (two-point block) x (one-fewer-descendant block)."""
    k0, a0 = ins[0]
    assert k0 >= 1 and len(ins) >= 3
    w = Insertion(k0 - 1, a0)
    u, v = ins[-2], ins[-1]
    mids = ins[1:-2]
    total = ZERO
    for sub, comp, count in sub_multisets(mids):
        for a, b, c in eta_inv_entries(model):
            left_ins = canonical_insertions((w, Insertion(0, b)) + sub)
            right_ins = canonical_insertions((Insertion(0, a), u, v) + comp)
            for d1 in range(d + 1):
                left = descendant_g0(model, d1, left_ins)
                if left == 0:
                    continue
                right = descendant_g0(model, d - d1, right_ins)
                if right == 0:
                    continue
                total += count * c * left * right
    return total


def _primary_value(model: TargetModel, d: int, ins: tuple[Insertion, ...]) -> Fraction:
    """Terminal primary correlators after all strips: point-class powers for
    surfaces (the N_d table), the bare degree-1 invariant for curves."""
    top = model.top_idx
    if len(ins) == 0:
        if model.dim == 1 and d == 1 and top is not None:
            seed = model.seed_value(0, 1, canonical_insertions(((0, top), (0, top))))
            if seed is not None:
                return seed
        if model.dim <= 2:
            return ZERO
        raise NoOracleError(f"no primary table for model {model.name}")
    if model.dim == 2 and top is not None and all(i == Insertion(0, top) for i in ins):
        seed = model.seed_value(0, 1, canonical_insertions(((0, top), (0, top))))
        if seed is None:
            raise NoOracleError(f"model {model.name} has no degree-1 two-point seed")
        # the selection rule already forces len(ins) == 3d - 1 here
        return rational_curve_count(d, seed)
    raise NoOracleError(f"no primary reduction for {ins} on model {model.name}")


def clear_caches() -> None:
    _memo.clear()
    _staged.clear()
    _nd_memo.clear()


def target_cache() -> dict[tuple[TargetModel, int, tuple[Insertion, ...]], Fraction]:
    """The memo table persisted by the cli cache file."""
    return _memo


def staged_cache() -> dict[tuple[str, int, tuple[Insertion, ...]], Fraction]:
    """Loaded-but-not-yet-consumed cache entries (also persisted)."""
    return _staged


def stage_cached_value(name: str, d: int, ins: tuple[Insertion, ...], value: Fraction) -> None:
    """Pre-load a persisted value; adopted on first lookup for a model with
    the matching name."""
    _staged[(name, d, ins)] = value

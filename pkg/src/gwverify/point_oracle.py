"""Exact psi-class intersection numbers on moduli spaces of curves.

``psi_correlator(g, levels)`` returns the integral of psi_1^{k_1}...psi_n^{k_n}
over the (compactified) moduli space of genus-g n-pointed curves, as an exact
rational.  The primary recursion is the Virasoro/DVV one, driven off the
highest descendant level; it is anchored by three independent validations:

* closed forms: genus 0 gives the multinomial (n-3)!/prod(k_i!), and the
  one-point numbers are 1/(24^g g!);
* ``trr_point_oracle`` recomputes every g <= 2 value through a disjoint
  pipeline built from the genus-1 relation and the genus-2 Mumford-type
  relation for two-point-subtracted descendants;
* string and dilaton reductions, exposed as ``string_reduce`` and
  ``dilaton_reduce``.

Values are memoized; the tables are shared with the persistent cache managed
by the cli module.  Cache writes are single dict assignments (atomic under
the interpreter lock), so concurrent lookups are safe; a duplicated
computation writes the same value twice, which is benign.

Known values::

    psi_correlator(0, (0, 0, 0)) == 1
    psi_correlator(1, (1,))      == Fraction(1, 24)
    psi_correlator(2, (4,))      == Fraction(1, 1152)
    psi_correlator(3, (7,))      == Fraction(1, 82944)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from gwverify.combinat import distribute, sub_multisets

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_MAX_GENUS = 4
DEFAULT_MAX_LEVEL_SUM = 24


class ResourceCapError(RuntimeError):
    """Requested correlator exceeds the configured genus/level caps."""


class ReductionError(ValueError):
    """A string/dilaton reduction was applied outside its guard."""


@dataclass(frozen=True)
class PointKey:
    """Genus plus level multiset, sorted descending."""

    genus: int
    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(sorted(self.levels, reverse=True)))
        if self.genus < 0 or any(k < 0 for k in self.levels):
            raise ValueError(f"bad point key {self}")

    @property
    def n(self) -> int:
        return len(self.levels)

    def level_sum(self) -> int:
        return sum(self.levels)


def dimension_ok(g: int, levels: tuple[int, ...]) -> bool:
    """Levels must sum to 3g-3+n, and (g, n) must be stable."""
    n = len(levels)
    if g == 0 and n < 3:
        return False
    if g == 1 and n < 1:
        return False
    if g >= 2 and n == 0:
        return False
    return sum(levels) == 3 * g - 3 + n


@lru_cache(maxsize=None)
def _dfact(k: int) -> int:
    """(2k+1)!! = (2k+1)!/(2^k k!)."""
    return math.factorial(2 * k + 1) // (2**k * math.factorial(k))


_norm_cache: dict[tuple[int, tuple[int, ...]], Fraction] = {}
_psi_cache: dict[tuple[int, tuple[int, ...]], Fraction] = {}


def _norm(g: int, levels: tuple[int, ...]) -> Fraction:
    """DVV recursion in the normalization with (2k+1)!! per insertion."""
    if not dimension_ok(g, levels):
        return ZERO
    key = (g, levels)
    hit = _norm_cache.get(key)
    if hit is not None:
        return hit
    psi_hit = _psi_cache.get(key)
    if psi_hit is not None:
        val = psi_hit
        for k in levels:
            val *= _dfact(k)
        _norm_cache[key] = val
        return val

    if key == (0, (0, 0, 0)):
        val = ONE
    elif key == (1, (1,)):
        val = Fraction(3, 24)
    else:
        k0 = levels[0]
        rest = levels[1:]
        k = k0 - 1  # recursion removes tau_{k+1}
        val = ZERO
        for j, kj in enumerate(rest):
            lowered = tuple(sorted(rest[:j] + (k + kj,) + rest[j + 1:], reverse=True))
            val += (2 * kj + 1) * _norm(g, lowered)
        for a in range(k):
            b = k - 1 - a
            val += Fraction(1, 2) * _norm(g - 1, tuple(sorted((a, b) + rest, reverse=True)))
            for g1 in range(g + 1):
                g2 = g - g1
                for sub, comp, count in sub_multisets(rest):
                    left = _norm(g1, tuple(sorted((a,) + sub, reverse=True)))
                    if left == 0:
                        continue
                    right = _norm(g2, tuple(sorted((b,) + comp, reverse=True)))
                    if right == 0:
                        continue
                    val += Fraction(count, 2) * left * right

    _norm_cache[key] = val
    return val


def psi_correlator(g: int, levels, max_genus: int = DEFAULT_MAX_GENUS,
                   max_level_sum: int = DEFAULT_MAX_LEVEL_SUM) -> Fraction:
    """Exact value of the genus-g psi-monomial integral; 0 when the dimension
    constraint fails or the configuration is unstable."""
    levels = tuple(sorted(levels, reverse=True))
    if any(k < 0 for k in levels):
        raise ValueError(f"negative level in {levels}")
    if not dimension_ok(g, levels):
        return ZERO
    key = (g, levels)
    hit = _psi_cache.get(key)
    if hit is not None:
        return hit
    if g > max_genus or sum(levels) > max_level_sum:
        raise ResourceCapError(
            f"g={g}, level sum={sum(levels)} exceeds caps (genus<={max_genus}, sum<={max_level_sum})")
    val = _norm(g, levels)
    for k in levels:
        val /= _dfact(k)
    _psi_cache[key] = val
    return val


def genus0_closed_form(levels) -> Fraction:
    """(n-3)!/prod(k_i!) when the levels sum to n-3, else 0."""
    levels = tuple(levels)
    n = len(levels)
    if n < 3 or sum(levels) != n - 3:
        return ZERO
    den = 1
    for k in levels:
        den *= math.factorial(k)
    return Fraction(math.factorial(n - 3), den)


def one_point_closed_form(g: int) -> Fraction:
    """The one-point value at level 3g-2: 1/(24^g g!)."""
    return Fraction(1, 24**g * math.factorial(g))


def string_reduce(key: PointKey) -> list[PointKey]:
    """Remove one level-0 insertion: the value equals the sum over the other
    insertions with one level lowered (negative levels dropped)."""
    if 0 not in key.levels:
        raise ReductionError(f"{key} has no level-0 insertion")
    g, n = key.genus, key.n
    if (g == 0 and n - 1 < 3) or (g == 1 and n - 1 < 1):
        raise ReductionError(f"string reduction of {key} would destabilize")
    rest = list(key.levels)
    rest.remove(0)
    out = []
    for j, k in enumerate(rest):
        if k >= 1:
            out.append(PointKey(g, tuple(rest[:j] + [k - 1] + rest[j + 1:])))
    return out


def dilaton_reduce(key: PointKey) -> tuple[Fraction, PointKey]:
    """Remove one level-1 insertion: value = (2g-2+n') * value(rest)."""
    if 1 not in key.levels:
        raise ReductionError(f"{key} has no level-1 insertion")
    g, n = key.genus, key.n
    if (g == 0 and n - 1 < 3) or (g == 1 and n - 1 < 1):
        raise ReductionError(f"dilaton reduction of {key} would destabilize")
    rest = list(key.levels)
    rest.remove(1)
    return Fraction(2 * g - 2 + (n - 1)), PointKey(g, tuple(rest))


# ---------------------------------------------------------------------------
# Independent pipeline for g <= 2.
#
# Values are recomputed from scratch: genus 0 by the closed form, genus 1 by
# distributing derivatives over
#     <<tau_1(W)>>_1 = <<W g>><<g>>_1 + 1/24 <<W g g>>
# and genus 2 by distributing derivatives over the genus-2 relation for
# <<T^2(W)>>_2 rewritten for tau_2(W) (every surviving genus-2 key has a
# level >= 2 insertion, so the rewrite always applies).
# ---------------------------------------------------------------------------

_trr1_cache: dict[tuple[int, ...], Fraction] = {}
_trr2_cache: dict[tuple[int, ...], Fraction] = {}


def _product_rule(coeff_terms: list[tuple[Fraction, list[tuple[int, tuple[int, ...]]]]],
                  extras: tuple[int, ...], evaluate) -> Fraction:
    """Sum over terms of coeff * d^extras(prod factors), each factor a
    (genus, base levels) pair evaluated by ``evaluate``."""
    total = ZERO
    for coeff, factors in coeff_terms:
        for alloc, count in distribute(extras, len(factors)):
            prod = coeff * count
            if prod == 0:
                continue
            for (h, base), extra in zip(factors, alloc):
                prod *= evaluate(h, tuple(sorted(base + extra, reverse=True)))
                if prod == 0:
                    break
            total += prod
    return total


def _trr_eval(h: int, levels: tuple[int, ...]) -> Fraction:
    if h == 0:
        return genus0_closed_form(levels)
    if h == 1:
        return _trr_genus1(levels)
    return _trr_genus2(levels)


def _trr_genus1(levels: tuple[int, ...]) -> Fraction:
    levels = tuple(sorted(levels, reverse=True))
    if not dimension_ok(1, levels):
        return ZERO
    hit = _trr1_cache.get(levels)
    if hit is not None:
        return hit
    k1 = levels[0]
    assert k1 >= 1, levels
    w = k1 - 1
    extras = levels[1:]
    terms = [
        (ONE, [(0, (w, 0)), (1, (0,))]),
        (Fraction(1, 24), [(0, (w, 0, 0))]),
    ]
    val = _product_rule(terms, extras, _trr_eval)
    _trr1_cache[levels] = val
    return val


def _trr_genus2(levels: tuple[int, ...]) -> Fraction:
    levels = tuple(sorted(levels, reverse=True))
    if not dimension_ok(2, levels):
        return ZERO
    hit = _trr2_cache.get(levels)
    if hit is not None:
        return hit
    k1 = levels[0]
    assert k1 >= 2, levels
    w = k1 - 2
    extras = levels[1:]
    # tau_2(W) = T^2(W) + <<W g>> tau_1(g) + <<tau_1(W) g>> g - <<W g>><<g g>> g,
    # then the genus-2 value of <<T^2(W)>>_2 from the two-point-subtracted
    # recursion relation (all on the one-class target, pairing 1).
    terms = [
        (Fraction(7, 10), [(1, (0,)), (0, (w, 0, 0)), (1, (0,))]),
        (Fraction(1, 10), [(0, (w, 0, 0)), (1, (0, 0))]),
        (Fraction(-1, 240), [(0, (0, 0, 0)), (1, (w, 0))]),
        (Fraction(13, 240), [(0, (w, 0, 0, 0)), (1, (0,))]),
        (Fraction(1, 960), [(0, (w, 0, 0, 0, 0))]),
        (ONE, [(0, (w, 0)), (2, (1,))]),
        (ONE, [(0, (w + 1, 0)), (2, (0,))]),
        (-ONE, [(0, (w, 0)), (0, (0, 0)), (2, (0,))]),
    ]
    val = _product_rule(terms, extras, _trr_eval)
    _trr2_cache[levels] = val
    return val


def trr_point_oracle(g: int, levels) -> Fraction:
    """Second oracle for g <= 2, built from recursion relations only;
    agrees with ``psi_correlator`` on its whole domain."""
    if g > 2 or g < 0:
        raise ValueError(f"trr_point_oracle covers g <= 2, got g={g}")
    levels = tuple(sorted(levels, reverse=True))
    if any(k < 0 for k in levels):
        raise ValueError(f"negative level in {levels}")
    return _trr_eval(g, levels)


def clear_caches() -> None:
    _norm_cache.clear()
    _psi_cache.clear()
    _trr1_cache.clear()
    _trr2_cache.clear()


def psi_cache() -> dict[tuple[int, tuple[int, ...]], Fraction]:
    """The memo table persisted by the cli cache file."""
    return _psi_cache

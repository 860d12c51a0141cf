"""Exact scalars and the finite linear data of a target space.

Every number in this package is a ``fractions.Fraction``; there is no floating
point anywhere.  A :class:`TargetModel` holds what is needed to grade and
contract correlators: basis degrees, the intersection pairing ``eta`` and its
inverse, the first-Chern multiplication matrix, the Novikov degree bound and
the primary seed invariants.  Three models ship built in: ``point``, ``P1``
and ``P2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class ModelError(ValueError):
    """Malformed target-model data."""


def parse_rational(text: str) -> Fraction:
    """Parse ``p`` or ``p/q`` into a canonical Fraction."""
    text = text.strip()
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"bad rational {text!r}: {exc}") from None
    return value


def format_rational(x: Fraction) -> str:
    """Serialize a Fraction as ``p`` or ``p/q`` (canonical, q > 0)."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class Insertion(NamedTuple):
    """A descendant insertion tau_level(gamma_cls); level >= 0, cls 1-based."""

    level: int
    cls: int


def canonical_insertions(ins: Iterable[tuple[int, int]]) -> tuple[Insertion, ...]:
    """Sort insertions canonically: level descending, then class ascending."""
    out = tuple(sorted((Insertion(k, a) for (k, a) in ins), key=lambda i: (-i.level, i.cls)))
    for i in out:
        if i.level < 0:
            raise ModelError(f"negative descendant level in {out}")
    return out


@dataclass(frozen=True)
class CorrelatorKey:
    """Canonical cache key (genus, degree, sorted insertion multiset)."""

    genus: int
    degree: int
    insertions: tuple[Insertion, ...]

    def __post_init__(self) -> None:
        if self.genus < 0 or self.degree < 0:
            raise ModelError(f"negative genus or degree in {self}")
        object.__setattr__(self, "insertions", canonical_insertions(self.insertions))

    @property
    def n(self) -> int:
        return len(self.insertions)

    def level_sum(self) -> int:
        return sum(i.level for i in self.insertions)


@dataclass(frozen=True)
class QPoly:
    """Polynomial in the degree (Novikov) variable, truncated at a cutoff.

    ``coeffs[d]`` is the exact coefficient of degree d; the length fixes the
    cutoff.  All arithmetic stays truncated.
    """

    coeffs: tuple[Fraction, ...]

    @staticmethod
    def zero(cutoff: int) -> "QPoly":
        return QPoly((ZERO,) * (cutoff + 1))

    @staticmethod
    def const(value: Fraction, cutoff: int) -> "QPoly":
        return QPoly((Fraction(value),) + (ZERO,) * cutoff)

    @property
    def cutoff(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other: "QPoly") -> "QPoly":
        assert len(self.coeffs) == len(other.coeffs)
        return QPoly(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "QPoly") -> "QPoly":
        assert len(self.coeffs) == len(other.coeffs)
        return QPoly(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, other: "QPoly") -> "QPoly":
        assert len(self.coeffs) == len(other.coeffs)
        n = len(self.coeffs)
        out = [ZERO] * n
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j >= n:
                    break
                if b != 0:
                    out[i + j] += a * b
        return QPoly(tuple(out))

    def scale(self, c: Fraction) -> "QPoly":
        return QPoly(tuple(c * a for a in self.coeffs))

    @property
    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coeffs)

    def render(self) -> str:
        return ",".join(format_rational(a) for a in self.coeffs)


@dataclass(frozen=True)
class TargetModel:
    """Cohomology basis with grading, pairing, c1-action and degree data.

    Classes are indexed 1..n_classes; class 1 is the identity.  ``eta`` and
    ``eta_inv`` are tuples of tuples of Fractions.  ``cmat[a-1][b-1]`` is the
    coefficient of gamma_b in c1 cup gamma_a.  ``seeds`` maps primary seed
    keys (genus, degree, insertions) to values.
    """

    name: str
    dim: int
    degrees: tuple[int, ...]
    eta: tuple[tuple[Fraction, ...], ...]
    eta_inv: tuple[tuple[Fraction, ...], ...]
    cmat: tuple[tuple[Fraction, ...], ...]
    maxdeg: int
    seeds: tuple[tuple[tuple[int, int, tuple[Insertion, ...]], Fraction], ...]

    @property
    def n_classes(self) -> int:
        return len(self.degrees)

    @property
    def is_point(self) -> bool:
        return self.n_classes == 1 and self.dim == 0

    def half_degree(self, a: int) -> int:
        return self.degrees[a - 1] // 2

    @property
    def divisor_idx(self) -> Optional[int]:
        """The unique degree-2 class, if there is exactly one."""
        idxs = [a for a in range(1, self.n_classes + 1) if self.degrees[a - 1] == 2]
        return idxs[0] if len(idxs) == 1 else None

    @property
    def c1_pairing(self) -> Fraction:
        """Pairing of c1 with the degree generator (c1 = lambda * divisor)."""
        div = self.divisor_idx
        if div is None:
            return ZERO
        return self.cmat[0][div - 1]

    def divisor_cup(self, a: int) -> tuple[tuple[int, Fraction], ...]:
        """Cup product of the divisor class with gamma_a, as (class, coeff)s."""
        lam = self.c1_pairing
        if lam == 0:
            raise ModelError(f"model {self.name} has no divisor class")
        row = self.cmat[a - 1]
        return tuple((b, c / lam) for b, c in enumerate(row, start=1) if c != 0)

    @property
    def top_idx(self) -> Optional[int]:
        """The unique top-degree (point) class, if there is exactly one."""
        idxs = [a for a in range(1, self.n_classes + 1) if self.half_degree(a) == self.dim]
        return idxs[0] if len(idxs) == 1 else None

    @property
    def is_monomial_ring(self) -> bool:
        """True when eta pairs classes like powers of a single generator.

        Shipped models satisfy this; the constant-maps factorization relies
        on it to evaluate n-fold cup integrals.
        """
        n = self.n_classes
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                expect = ONE if self.half_degree(a) + self.half_degree(b) == self.dim else ZERO
                if self.eta[a - 1][b - 1] != expect:
                    return False
        return True

    def cup_integral(self, classes: Sequence[int]) -> Fraction:
        """Integral over the target of the cup product of basis classes."""
        if not self.is_monomial_ring:
            raise ModelError(f"no cup-integral oracle for model {self.name}")
        total = sum(self.half_degree(a) for a in classes)
        return ONE if total == self.dim else ZERO

    def seed_value(self, genus: int, degree: int, ins: tuple[Insertion, ...]) -> Optional[Fraction]:
        for key, val in self.seeds:
            if key == (genus, degree, ins):
                return val
        return None


def pair(model: TargetModel, a: int, b: int) -> Fraction:
    """Poincare pairing eta_{ab}."""
    return model.eta[a - 1][b - 1]


def raise_index(model: TargetModel, a: int) -> list[tuple[int, Fraction]]:
    """Coefficients of gamma^a = eta^{ab} gamma_b in the basis."""
    row = model.eta_inv[a - 1]
    return [(b, c) for b, c in enumerate(row, start=1) if c != 0]


def eta_inv_entries(model: TargetModel) -> list[tuple[int, int, Fraction]]:
    """Nonzero entries (a, b, eta^{ab}); the dummy-index expansion of a
    gamma^a ... gamma_a contraction."""
    out = []
    n = model.n_classes
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            c = model.eta_inv[a - 1][b - 1]
            if c != 0:
                out.append((a, b, c))
    return out


def selection_rule(model: TargetModel, key: CorrelatorKey) -> bool:
    """Dimension constraint; False means the correlator is exactly 0.

    Sum of (level + half-degree) must equal the virtual dimension
    (1-g)(dim-3) + <c1, degree> + n, and the configuration must be stable.
    """
    g, d, ins = key.genus, key.degree, key.insertions
    n = len(ins)
    if d == 0:
        if g == 0 and n < 3:
            return False
        if g == 1 and n < 1:
            return False
    lhs = sum(i.level + model.half_degree(i.cls) for i in ins)
    rhs = (1 - g) * (model.dim - 3) + model.c1_pairing * d + n
    return lhs == rhs


def euler_weights(model: TargetModel) -> tuple[tuple[Fraction, ...], tuple[tuple[Fraction, ...], ...]]:
    """Constants (b_a, C) of the grading vector field:
    b_a = (deg(gamma_a) - dim + 1) / 2."""
    bs = tuple(Fraction(model.degrees[a - 1] - model.dim + 1, 2) for a in range(1, model.n_classes + 1))
    return bs, model.cmat


def _invert(mat: list[list[Fraction]]) -> list[list[Fraction]]:
    """Exact Gaussian elimination; raises ModelError on a singular matrix."""
    n = len(mat)
    a = [row[:] + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ModelError("singular pairing matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = ONE / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _validate(model: TargetModel) -> TargetModel:
    n = model.n_classes
    if n < 1:
        raise ModelError("model needs at least one class")
    if model.degrees[0] != 0:
        raise ModelError("class 1 must be the identity (degree 0)")
    for a in range(1, n + 1):
        if model.degrees[a - 1] % 2 != 0 or model.degrees[a - 1] < 0:
            raise ModelError("odd cohomology unsupported")
    if model.maxdeg < 0:
        raise ModelError("negative degree cutoff")
    for a in range(n):
        for b in range(n):
            if model.eta[a][b] != model.eta[b][a]:
                raise ModelError("pairing matrix not symmetric")
    return model


def _build(name: str, dim: int, degrees: Sequence[int], eta: Sequence[Sequence[Fraction]],
           cmat: Sequence[Sequence[Fraction]], maxdeg: int,
           seeds: Sequence[tuple[tuple[int, int, tuple[Insertion, ...]], Fraction]] = ()) -> TargetModel:
    eta_t = tuple(tuple(Fraction(x) for x in row) for row in eta)
    inv = tuple(tuple(row) for row in _invert([list(r) for r in eta_t]))
    return _validate(TargetModel(
        name=name,
        dim=dim,
        degrees=tuple(degrees),
        eta=eta_t,
        eta_inv=inv,
        cmat=tuple(tuple(Fraction(x) for x in row) for row in cmat),
        maxdeg=maxdeg,
        seeds=tuple(seeds),
    ))


def _builtin(name: str) -> Optional[TargetModel]:
    if name == "point":
        return _build("point", 0, (0,), ((1,),), ((0,),), 0)
    if name == "P1":
        seed = ((0, 1, canonical_insertions([(0, 2), (0, 2)])), ONE)
        return _build("P1", 1, (0, 2),
                      ((0, 1), (1, 0)),
                      ((0, 2), (0, 0)),
                      8, (seed,))
    if name == "P2":
        seed = ((0, 1, canonical_insertions([(0, 3), (0, 3)])), ONE)
        return _build("P2", 2, (0, 2, 4),
                      ((0, 0, 1), (0, 1, 0), (1, 0, 0)),
                      ((0, 3, 0), (0, 0, 3), (0, 0, 0)),
                      8, (seed,))
    return None


def parse_seed_key(text: str) -> tuple[int, int, tuple[Insertion, ...]]:
    """Parse ``g=<g>,d=<d>,ins=<k:a,...>`` into a seed key."""
    head, sep, tail = text.partition("ins=")
    ins = parse_insertions(tail) if sep else ()
    g = d = None
    for part in head.split(","):
        part = part.strip()
        if not part:
            continue
        if part.startswith("g="):
            g = int(part[2:])
        elif part.startswith("d="):
            d = int(part[2:])
        else:
            raise ModelError(f"bad seed key component {part!r}")
    if g is None or d is None:
        raise ModelError(f"seed key {text!r} needs g= and d=")
    return (g, d, ins)


def parse_insertions(text: str) -> tuple[Insertion, ...]:
    """Parse ``k:a,k:a,...`` into canonical insertions; empty string is ()."""
    text = text.strip()
    if not text:
        return ()
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        try:
            k_s, a_s = piece.split(":")
            out.append((int(k_s), int(a_s)))
        except ValueError:
            raise ModelError(f"bad insertion {piece!r} (want level:class)") from None
    return canonical_insertions(out)


def format_insertions(ins: Sequence[Insertion]) -> str:
    return ",".join(f"{i.level}:{i.cls}" for i in ins)


def load_target(spec_text: str) -> TargetModel:
    """Load a model from the line-oriented target file grammar.

    Directives (one per line, ``#`` comments)::

        target NAME
        dim INT
        classes INT
        class IDX deg INT
        eta IDX IDX = RATIONAL        (symmetric closure applied)
        c1 IDX -> IDX = RATIONAL
        maxdeg INT
        seed KEY = RATIONAL           (KEY: g=<g>,d=<d>,ins=<k:a,...>)
    """
    name = "custom"
    dim = None
    nclasses = None
    degrees: dict[int, int] = {}
    eta_entries: dict[tuple[int, int], Fraction] = {}
    c1_entries: dict[tuple[int, int], Fraction] = {}
    maxdeg = 0
    seeds: list[tuple[tuple[int, int, tuple[Insertion, ...]], Fraction]] = []

    for lineno, raw in enumerate(spec_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "target" and len(toks) == 2:
                name = toks[1]
            elif toks[0] == "dim" and len(toks) == 2:
                dim = int(toks[1])
            elif toks[0] == "classes" and len(toks) == 2:
                nclasses = int(toks[1])
            elif toks[0] == "class" and len(toks) == 4 and toks[2] == "deg":
                degrees[int(toks[1])] = int(toks[3])
            elif toks[0] == "eta" and len(toks) == 5 and toks[3] == "=":
                eta_entries[(int(toks[1]), int(toks[2]))] = parse_rational(toks[4])
            elif toks[0] == "c1" and len(toks) == 6 and toks[2] == "->" and toks[4] == "=":
                c1_entries[(int(toks[1]), int(toks[3]))] = parse_rational(toks[5])
            elif toks[0] == "maxdeg" and len(toks) == 2:
                maxdeg = int(toks[1])
            elif toks[0] == "seed" and "=" in line:
                eq = line.rindex("=")
                key = parse_seed_key(line[len("seed"):eq].strip())
                seeds.append((key, parse_rational(line[eq + 1:])))
            else:
                raise ModelError(f"unknown directive {toks[0]!r}")
        except (ValueError, IndexError) as exc:
            raise ModelError(f"line {lineno}: {exc}") from None
        except ModelError as exc:
            raise ModelError(f"line {lineno}: {exc}") from None

    if dim is None or nclasses is None:
        raise ModelError("model file needs 'dim' and 'classes' directives")
    degs = []
    for a in range(1, nclasses + 1):
        if a not in degrees:
            raise ModelError(f"class {a} has no declared degree")
        degs.append(degrees[a])
    eta = [[ZERO] * nclasses for _ in range(nclasses)]
    for (a, b), v in eta_entries.items():
        if not (1 <= a <= nclasses and 1 <= b <= nclasses):
            raise ModelError(f"eta index out of range: {(a, b)}")
        eta[a - 1][b - 1] = v
        eta[b - 1][a - 1] = v
    cmat = [[ZERO] * nclasses for _ in range(nclasses)]
    for (a, b), v in c1_entries.items():
        if not (1 <= a <= nclasses and 1 <= b <= nclasses):
            raise ModelError(f"c1 index out of range: {(a, b)}")
        cmat[a - 1][b - 1] = v
    return _build(name, dim, degs, eta, cmat, maxdeg, seeds)


def get_model(name_or_text: str) -> TargetModel:
    """Resolve a builtin name or parse a model file body."""
    builtin = _builtin(name_or_text.strip())
    if builtin is not None:
        return builtin
    return load_target(name_or_text)

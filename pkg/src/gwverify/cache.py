"""Persistent memo cache for correlator values.

Line format (tab separated)::

    target|g=<g>|d=<d>|ins=<k:a,...>  <TAB>  <rational>

Keys are canonical (insertions sorted level-descending then class-ascending,
rationals reduced with positive denominator); a file containing any
non-canonical or malformed line is refused in full, never partially loaded.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from gwverify import point_oracle, target_oracle
from gwverify.model import (
    Insertion,
    canonical_insertions,
    format_insertions,
    format_rational,
    parse_insertions,
    parse_rational,
)


class CacheError(ValueError):
    """Corrupt or non-canonical cache file."""


def format_key(target: str, g: int, d: int, ins: tuple[Insertion, ...]) -> str:
    return f"{target}|g={g}|d={d}|ins={format_insertions(ins)}"


def parse_line(line: str) -> tuple[str, int, int, tuple[Insertion, ...], Fraction]:
    try:
        key, value_s = line.split("\t")
        target, g_s, d_s, ins_s = key.split("|")
        if not (g_s.startswith("g=") and d_s.startswith("d=") and ins_s.startswith("ins=")):
            raise ValueError("bad key fields")
        g, d = int(g_s[2:]), int(d_s[2:])
        ins = parse_insertions(ins_s[4:])
        if format_insertions(ins) != ins_s[4:]:
            raise ValueError("non-canonical insertion order")
        value = parse_rational(value_s)
        if format_rational(value) != value_s:
            raise ValueError("non-canonical rational")
    except ValueError as exc:
        raise CacheError(f"bad cache line {line!r}: {exc}") from None
    if g < 0 or d < 0:
        raise CacheError(f"bad cache line {line!r}: negative genus or degree")
    return target, g, d, ins, value


def cache_load(path: str | Path) -> int:
    """Load a cache file into the oracle memo tables; returns the number of
    entries.  Raises CacheError without loading anything if any line is bad."""
    text = Path(path).read_text()
    entries = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        entries.append(parse_line(raw))
    for target, g, d, ins, value in entries:
        if target == "point":
            levels = tuple(sorted((i.level for i in ins), reverse=True))
            point_oracle.psi_cache()[(g, levels)] = value
        else:
            target_oracle.stage_cached_value(target, d, ins, value)
    return len(entries)


def cache_store(path: str | Path) -> int:
    """Write the current memo tables to a cache file; returns entry count."""
    entries = {}
    for (g, levels), value in point_oracle.psi_cache().items():
        ins = canonical_insertions((k, 1) for k in levels)
        entries[format_key("point", g, 0, ins)] = value
    for (name, d, ins), value in target_oracle.staged_cache().items():
        entries[format_key(name, 0, d, ins)] = value
    for (model, d, ins), value in target_oracle.target_cache().items():
        entries[format_key(model.name, 0, d, ins)] = value
    lines = sorted(entries.items())
    out = "".join(f"{k}\t{format_rational(v)}\n" for k, v in lines)
    Path(path).write_text(out)
    return len(lines)

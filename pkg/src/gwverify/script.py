"""Relation-script parsing and execution.

Line-oriented grammar (``#`` starts a comment)::

    script  := (stmt NEWLINE)*
    stmt    := compute | check | set
    compute := "compute" "<" ins+ ";" "g=" INT ("," "d=" INT)? ">"
    ins     := "tau_" INT "(" INT ")"
    check   := "check" IDENT "(" kv ("," kv)* ")"
    kv      := IDENT "=" (INT | INT ".." INT | IDENT | ins
                          | "[" ins ("," ins)* "]")
    set     := "set" IDENT "=" (INT | IDENT)

``set`` options persist for later statements: ``target`` and ``cutoff``.
Integer ranges in check parameters expand into sweeps.  Unknown option or
parameter keys are rejected at parse time.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from gwverify import point_oracle, target_oracle
from gwverify.model import Insertion, format_rational, get_model
from gwverify.relations import (
    RELATIONS,
    CheckReport,
    CheckSpec,
    run_check,
)


class ScriptError(ValueError):
    """Syntax or semantic error, with line/column position."""

    def __init__(self, msg: str, line: int, col: int = 0):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class ComputeStmt:
    insertions: tuple[Insertion, ...]
    genus: int
    degree: int = 0


RangeVal = tuple[int, int]
KVValue = Union[int, RangeVal, str, tuple[Insertion, ...]]


@dataclass(frozen=True)
class CheckStmt:
    ident: str
    kvs: tuple[tuple[str, KVValue], ...]


@dataclass(frozen=True)
class SetStmt:
    key: str
    value: Union[int, str]


Stmt = Union[ComputeStmt, CheckStmt, SetStmt]

SET_KEYS = {"target", "cutoff"}
SPEC_KEYS = {"target", "extras", "probe", "cutoff", "d"}
INT_PARAM_KEYS = {"g", "m", "k", "l", "h", "j", "p", "x", "ph", "qh"}
FIELD_PARAM_KEYS = {"w", "u", "v", "form"}
LIST_PARAM_KEYS = {"ws", "vs"}

_INS_RE = re.compile(r"tau_(\d+)\((\d+)\)")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"-?\d+")


def _parse_ins_list(text: str, lineno: int, col: int) -> tuple[Insertion, ...]:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        m = _INS_RE.fullmatch(piece)
        if not m:
            raise ScriptError(f"bad insertion {piece!r}", lineno, col)
        out.append(Insertion(int(m.group(1)), int(m.group(2))))
    return tuple(out)


def _parse_compute(body: str, lineno: int) -> ComputeStmt:
    m = re.fullmatch(r"<(.+)>", body.strip())
    if not m:
        raise ScriptError("compute wants <tau_k(a) ... ; g=G[, d=D]>", lineno, len("compute "))
    inner = m.group(1)
    if ";" not in inner:
        raise ScriptError("compute literal needs ';' before g=", lineno)
    ins_part, meta = inner.split(";", 1)
    ins_toks = ins_part.split()
    if not ins_toks:
        raise ScriptError("compute needs at least one insertion", lineno)
    insertions = []
    for tok in ins_toks:
        mi = _INS_RE.fullmatch(tok)
        if not mi:
            raise ScriptError(f"bad insertion {tok!r}", lineno, body.find(tok))
        insertions.append(Insertion(int(mi.group(1)), int(mi.group(2))))
    genus = degree = None
    for bit in meta.split(","):
        bit = bit.strip()
        if bit.startswith("g="):
            genus = int(bit[2:])
        elif bit.startswith("d="):
            degree = int(bit[2:])
        else:
            raise ScriptError(f"bad compute option {bit!r}", lineno)
    if genus is None:
        raise ScriptError("compute needs g=", lineno)
    return ComputeStmt(tuple(insertions), genus, degree if degree is not None else 0)


def _parse_kv_value(text: str, lineno: int, col: int) -> KVValue:
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ScriptError("unterminated insertion list", lineno, col)
        return _parse_ins_list(text[1:-1], lineno, col)
    m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", text)
    if m:
        return (int(m.group(1)), int(m.group(2)))
    if _INT_RE.fullmatch(text):
        return int(text)
    if _INS_RE.fullmatch(text) or _IDENT_RE.fullmatch(text):
        return text
    raise ScriptError(f"bad parameter value {text!r}", lineno, col)


def _split_kvs(body: str, lineno: int, col0: int) -> list[tuple[str, str, int]]:
    """Split 'a=1, b=[x, y]' on commas outside brackets; yields (key, raw, col)."""
    parts = []
    depth = 0
    cur = ""
    start = 0
    for i, ch in enumerate(body + ","):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            if cur.strip():
                parts.append((cur, col0 + start))
            cur = ""
            start = i + 1
        else:
            cur += ch
    out = []
    for raw, col in parts:
        if "=" not in raw:
            raise ScriptError(f"expected key=value, got {raw.strip()!r}", lineno, col)
        key, val = raw.split("=", 1)
        out.append((key.strip(), val.strip(), col))
    return out


def _validate_check_key(ident: str, key: str, lineno: int, col: int) -> None:
    rel = RELATIONS[ident]
    if key in SPEC_KEYS:
        return
    if key in rel["keys"]:
        return
    raise ScriptError(f"unknown parameter {key!r} for check {ident!r}", lineno, col)


def _parse_check(body: str, lineno: int) -> CheckStmt:
    m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)", body.strip())
    if not m:
        raise ScriptError("check wants IDENT(key=value, ...)", lineno, len("check "))
    ident, inner = m.group(1), m.group(2)
    if ident not in RELATIONS:
        raise ScriptError(f"unknown relation id {ident!r}", lineno, len("check "))
    kvs = []
    for key, raw, col in _split_kvs(inner, lineno, len("check ") + len(ident) + 1):
        _validate_check_key(ident, key, lineno, col)
        kvs.append((key, _parse_kv_value(raw, lineno, col)))
    return CheckStmt(ident, tuple(kvs))


def parse_script(text: str) -> list[Stmt]:
    """Parse a relation script into its statement list."""
    stmts: list[Stmt] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("compute"):
            stmts.append(_parse_compute(line[len("compute"):], lineno))
        elif line.startswith("check"):
            stmts.append(_parse_check(line[len("check"):], lineno))
        elif line.startswith("set"):
            body = line[len("set"):].strip()
            if "=" not in body:
                raise ScriptError("set wants key = value", lineno, len("set "))
            key, val = (s.strip() for s in body.split("=", 1))
            if key not in SET_KEYS:
                raise ScriptError(f"unknown option {key!r}", lineno, len("set "))
            value: Union[int, str] = int(val) if _INT_RE.fullmatch(val) else val
            if key == "cutoff" and not isinstance(value, int):
                raise ScriptError("cutoff wants an integer", lineno)
            stmts.append(SetStmt(key, value))
        else:
            raise ScriptError(f"unknown statement {line.split()[0]!r}", lineno)
    return stmts


def _fmt_value(v: KVValue) -> str:
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    if isinstance(v, tuple) and len(v) == 2 and all(isinstance(x, int) for x in v):
        return f"{v[0]}..{v[1]}"
    return "[" + ", ".join(f"tau_{i.level}({i.cls})" for i in v) + "]"


def pretty_print(stmts: list[Stmt]) -> str:
    """Canonical text form; reparses to an identical statement list."""
    lines = []
    for s in stmts:
        if isinstance(s, ComputeStmt):
            ins = " ".join(f"tau_{i.level}({i.cls})" for i in s.insertions)
            meta = f"g={s.genus}" + (f", d={s.degree}" if s.degree else "")
            lines.append(f"compute <{ins}; {meta}>")
        elif isinstance(s, CheckStmt):
            inner = ", ".join(f"{k}={_fmt_value(v)}" for k, v in s.kvs)
            lines.append(f"check {s.ident}({inner})")
        else:
            lines.append(f"set {s.key} = {s.value}")
    return "\n".join(lines) + ("\n" if lines else "")


def compute_value(target: str, genus: int, degree: int,
                  insertions: tuple[Insertion, ...]) -> Fraction:
    """Exact correlator value for a compute statement or CLI call."""
    model = get_model(target)
    if model.is_point:
        if degree != 0:
            return Fraction(0)
        return point_oracle.psi_correlator(genus, tuple(i.level for i in insertions))
    if genus != 0:
        raise target_oracle.NoOracleError(
            f"target {target} supports genus 0 only (got genus {genus})")
    return target_oracle.descendant_g0(model, degree, insertions)


def _expand_check(stmt: CheckStmt, options: dict) -> list[CheckSpec]:
    base: dict = {}
    spec_kw: dict = {
        "target": options.get("target", "point"),
        "cutoff": options.get("cutoff"),
        "extras": (),
        "probe": False,
    }
    ranges: list[tuple[str, range]] = []
    for key, value in stmt.kvs:
        if key == "target":
            spec_kw["target"] = str(value)
        elif key in ("cutoff", "d"):
            spec_kw["cutoff"] = int(value)
        elif key == "probe":
            spec_kw["probe"] = bool(int(value))
        elif key == "extras":
            spec_kw["extras"] = value if isinstance(value, tuple) else ()
        elif key in LIST_PARAM_KEYS:
            base[key] = [f"tau_{i.level}({i.cls})" for i in value]
        elif isinstance(value, tuple) and len(value) == 2 and all(isinstance(x, int) for x in value):
            ranges.append((key, range(value[0], value[1] + 1)))
        elif key in FIELD_PARAM_KEYS or isinstance(value, str):
            base[key] = value
        else:
            base[key] = int(value)
    specs = []
    if ranges:
        keys = [k for k, _ in ranges]
        for combo in itertools.product(*(r for _, r in ranges)):
            params = dict(base)
            params.update(zip(keys, combo))
            specs.append(CheckSpec(stmt.ident, target=spec_kw["target"], params=params,
                                   extras=spec_kw["extras"], cutoff=spec_kw["cutoff"],
                                   probe=spec_kw["probe"]))
    else:
        specs.append(CheckSpec(stmt.ident, target=spec_kw["target"], params=base,
                               extras=spec_kw["extras"], cutoff=spec_kw["cutoff"],
                               probe=spec_kw["probe"]))
    return specs


@dataclass
class ScriptResult:
    lines: list[str] = field(default_factory=list)
    reports: list[CheckReport] = field(default_factory=list)

    @property
    def output(self) -> str:
        return "".join(line + "\n" for line in self.lines)


def run_script(stmts: list[Stmt]) -> ScriptResult:
    """Execute statements in order; deterministic, cache-warmth independent."""
    options: dict = {}
    result = ScriptResult()
    for idx, stmt in enumerate(stmts):
        try:
            if isinstance(stmt, SetStmt):
                options[stmt.key] = stmt.value
            elif isinstance(stmt, ComputeStmt):
                value = compute_value(options.get("target", "point"), stmt.genus,
                                      stmt.degree, stmt.insertions)
                result.lines.append(format_rational(value))
            else:
                for spec in _expand_check(stmt, options):
                    report = run_check(spec)
                    result.reports.append(report)
                    result.lines.append(report.render())
        except (ValueError, RuntimeError) as exc:
            raise ScriptError(f"statement {idx + 1}: {exc}", 0) from exc
    return result

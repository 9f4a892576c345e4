"""JSON problem files.

Three kinds are understood::

    {"kind": "lcp", "n": 2, "M": [[2, 1], [1, 2]], "q": [-1, -1]}
    {"kind": "cournot", "n": 5, "c_lin": [...], "L": [...], "beta": [...],
     "demand_scale": 5000, "demand_elasticity": 1.1}
    {"kind": "builtin", "n": 5, "builtin_name": "cournot-murphy5"}

Every kind accepts an optional ``x0`` (default: all ones). Keys outside the
declared kind are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .problems import LcpData, OligopolyParams, cournot_problem, get_builtin, lcp_as_ncp
from .reformulate import NcpProblem

KINDS = ("lcp", "cournot", "builtin")
_FIELDS = {
    "lcp": {"M", "q"},
    "cournot": {"c_lin", "L", "beta", "demand_scale", "demand_elasticity"},
    "builtin": {"builtin_name"},
}
_COMMON = {"kind", "n", "x0"}


class ProblemFileError(ValueError):
    """Malformed problem document."""


def _num(v: Any, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFileError(f"{what}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ProblemFileError(f"{what}: must be finite")
    return v


def _vec(v: Any, n: int, what: str) -> tuple:
    if not isinstance(v, list) or len(v) != n:
        raise ProblemFileError(f"{what}: expected a list of {n} numbers")
    return tuple(_num(e, what) for e in v)


@dataclass(frozen=True)
class ProblemFile:
    kind: str
    n: int
    M: Optional[tuple] = None
    q: Optional[tuple] = None
    c_lin: Optional[tuple] = None
    L: Optional[tuple] = None
    beta: Optional[tuple] = None
    demand_scale: Optional[float] = None
    demand_elasticity: Optional[float] = None
    builtin_name: Optional[str] = None
    x0: Optional[tuple] = None

    @classmethod
    def from_dict(cls, doc: Any) -> "ProblemFile":
        if not isinstance(doc, dict):
            raise ProblemFileError("problem file must be a JSON object")
        kind = doc.get("kind")
        if kind not in KINDS:
            raise ProblemFileError(f"kind must be one of {KINDS}, got {kind!r}")
        extra = set(doc) - _COMMON - _FIELDS[kind]
        if extra:
            raise ProblemFileError(f"unexpected keys for kind {kind!r}: {sorted(extra)}")
        missing = _FIELDS[kind] - set(doc)
        if "n" not in doc and kind != "builtin":
            missing.add("n")
        if missing:
            raise ProblemFileError(f"missing keys for kind {kind!r}: {sorted(missing)}")

        kw: dict[str, Any] = {"kind": kind}
        if kind == "builtin":
            name = doc["builtin_name"]
            if not isinstance(name, str):
                raise ProblemFileError("builtin_name must be a string")
            try:
                n_real = get_builtin(name).n
            except KeyError as exc:
                raise ProblemFileError(str(exc.args[0])) from None
            n = doc.get("n", n_real)
            kw["builtin_name"] = name
        else:
            n = doc["n"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ProblemFileError(f"n must be a positive integer, got {n!r}")
        if kind == "builtin" and n != n_real:
            raise ProblemFileError(f"builtin {kw['builtin_name']!r} has n = {n_real}, not {n}")
        kw["n"] = n

        if kind == "lcp":
            rows = doc["M"]
            if not isinstance(rows, list) or len(rows) != n:
                raise ProblemFileError(f"M: expected {n} rows")
            kw["M"] = tuple(_vec(r, n, "M") for r in rows)
            kw["q"] = _vec(doc["q"], n, "q")
        elif kind == "cournot":
            for key in ("c_lin", "L", "beta"):
                kw[key] = _vec(doc[key], n, key)
            kw["demand_scale"] = _num(doc["demand_scale"], "demand_scale")
            kw["demand_elasticity"] = _num(doc["demand_elasticity"], "demand_elasticity")
        if doc.get("x0") is not None:
            kw["x0"] = _vec(doc["x0"], n, "x0")
        pf = cls(**kw)
        pf.build()  # surface parameter errors now
        return pf

    def to_dict(self) -> dict:
        keys = ["kind", "n", *sorted(_FIELDS[self.kind]), "x0"]
        doc = asdict(self)
        out = {}
        for k in keys:
            v = doc[k]
            if v is None:
                continue
            out[k] = [list(r) for r in v] if k == "M" else (list(v) if isinstance(v, tuple) else v)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ProblemFile":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "ProblemFile":
        return cls.loads(Path(path).read_text())

    def dump(self, path) -> None:
        Path(path).write_text(self.dumps())

    def start(self) -> np.ndarray:
        return np.ones(self.n) if self.x0 is None else np.array(self.x0, dtype=float)

    def build(self) -> NcpProblem:
        try:
            if self.kind == "lcp":
                return lcp_as_ncp(LcpData(np.array(self.M, dtype=float), np.array(self.q, dtype=float)))
            if self.kind == "cournot":
                params = OligopolyParams(self.c_lin, self.L, self.beta,
                                         self.demand_scale, self.demand_elasticity)
                return cournot_problem(params)
            return get_builtin(self.builtin_name)
        except (ValueError, KeyError) as exc:
            raise ProblemFileError(str(exc)) from None

    @classmethod
    def for_builtin(cls, name: str, x0=None) -> "ProblemFile":
        return cls.from_dict({"kind": "builtin", "builtin_name": name,
                              **({"x0": [float(v) for v in x0]} if x0 is not None else {})})

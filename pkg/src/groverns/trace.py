"""Success-probability traces and their CSV/JSON serialization.

CSV layout: ``# key=value`` comment lines carrying parameters, then a header
row (``t,P`` for a single trace) and one row per time step. Floats in data
rows use 12 significant digits.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DomainError

P_TOL = 1e-12
FLOAT_FMT = "{:.12g}"

# metadata keys with a known type; anything else round-trips as a string
_META_TYPES = {"n": int, "w": int, "p": float, "mu": float, "t_max": int, "m": int}


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """P(t) for t = 0..t_max plus the parameters that produced it."""

    metadata: Mapping[str, Any]
    P: np.ndarray
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 1 or P.size == 0:
            raise DomainError("trace needs a non-empty 1-d probability series")
        if np.any(P < -P_TOL) or np.any(P > 1 + P_TOL):
            raise DomainError(f"probabilities outside [0, 1]: min={P.min()!r}, max={P.max()!r}")
        P = np.clip(P, 0.0, 1.0)
        t = np.arange(P.size) if self.t is None else np.array(self.t, dtype=int)
        if t.shape != P.shape or t[0] != 0 or np.any(np.diff(t) <= 0):
            raise DomainError("time index must start at 0 and increase strictly")
        P.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __eq__(self, other):
        if not isinstance(other, SimulationTrace):
            return NotImplemented
        return (self.metadata == other.metadata and np.array_equal(self.t, other.t)
                and np.array_equal(self.P, other.P))

    def __len__(self):
        return self.P.size

    @property
    def t_max(self) -> int:
        return int(self.t[-1])

    def to_csv(self) -> str:
        return format_csv(self.metadata, {"t": self.t, "P": self.P})

    def to_json(self) -> str:
        payload = {"metadata": _jsonable(self.metadata), "t": self.t.tolist(), "P": self.P.tolist()}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SimulationTrace":
        meta, columns = parse_csv(text)
        if list(columns) != ["t", "P"]:
            raise DomainError(f"expected columns t,P, got {list(columns)}")
        return cls(meta, columns["P"], columns["t"])

    @classmethod
    def from_json(cls, text: str) -> "SimulationTrace":
        payload = json.loads(text)
        meta = {k: _coerce_meta(k, v) for k, v in payload["metadata"].items()}
        return cls(meta, payload["P"], payload["t"])


def _jsonable(meta: Mapping[str, Any]) -> dict:
    out = {}
    for k, v in meta.items():
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _format_meta(value: Any) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(int(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce_meta(key: str, value: Any) -> Any:
    if key == "sites":
        if isinstance(value, str):
            return tuple(int(x) for x in value.split(",") if x.strip() != "")
        return tuple(int(x) for x in value)
    kind = _META_TYPES.get(key)
    if kind is not None and value is not None:
        return kind(value)
    return value


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return FLOAT_FMT.format(float(x))


def format_csv(metadata: Mapping[str, Any], columns: Mapping[str, Sequence]) -> str:
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}={_format_meta(value)}\n")
    names = list(columns)
    buf.write(",".join(names) + "\n")
    rows = len(next(iter(columns.values()))) if names else 0
    cols = [list(columns[k]) for k in names]
    for i in range(rows):
        buf.write(",".join(format_value(c[i]) for c in cols) + "\n")
    return buf.getvalue()


def parse_csv(text: str) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    meta: dict[str, Any] = {}
    header = None
    rows: list[list[str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = _coerce_meta(key.strip(), value.strip())
            continue
        if header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if header is None:
        raise DomainError("CSV has no header row")
    columns = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        if name == "t":
            columns[name] = np.array([int(x) for x in raw], dtype=int)
        else:
            columns[name] = np.array([float(x) if x != "" else np.nan for x in raw])
    return meta, columns

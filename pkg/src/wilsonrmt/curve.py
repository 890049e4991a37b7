"""DensityCurve container and its CSV / JSON encodings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__

__all__ = ["DensityCurve", "NEGATIVE_TOL"]

NEGATIVE_TOL = 1e-10


@dataclass
class DensityCurve:
    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        self.meta = dict(self.meta)
        self.meta.setdefault("tool_version", __version__)
        self.meta.setdefault("generated", datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def clipped(self) -> np.ndarray:
        """Values with quadrature noise above -NEGATIVE_TOL set to 0."""
        v = self.values.copy()
        if np.any(v < -NEGATIVE_TOL):
            worst = float(v.min())
            raise ValueError(f"density has a genuinely negative value {worst:.3e}")
        v[v < 0] = 0.0
        return v

    def to_csv(self) -> str:
        lines = ["x,rho"]
        lines += [f"{float(x)!r},{float(y)!r}" for x, y in zip(self.grid, self.clipped())]
        return "\n".join(lines) + "\n"

    def to_json(self, extra: dict | None = None) -> str:
        doc = {"grid": [float(x) for x in self.grid],
               "values": [float(y) for y in self.clipped()],
               "meta": _jsonable(self.meta)}
        if extra:
            doc.update(_jsonable(extra))
        return json.dumps(doc, indent=1, sort_keys=True)

    def write(self, path, fmt: str = "csv") -> None:
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None) -> "DensityCurve":
        rows = text.strip().splitlines()
        if rows[0].strip() != "x,rho":
            raise ValueError("missing x,rho header")
        xy = np.array([[float(t) for t in r.split(",")] for r in rows[1:]])
        return cls(xy[:, 0], xy[:, 1], meta or {})

    @classmethod
    def from_json(cls, text: str) -> "DensityCurve":
        doc = json.loads(text)
        return cls(doc["grid"], doc["values"], doc.get("meta", {}))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj

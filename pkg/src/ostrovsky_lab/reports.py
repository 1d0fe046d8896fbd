"""Probe reports: per-scale ratio summaries, log-log slopes, CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


def fit_log2_slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of ``log2(y)`` against ``x`` and the RMS residual.

    ``x`` is used as given (pass ``log2(N)`` for power laws, ``j`` for
    dyadic scales).  Nonpositive ``y`` values are rejected.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("slope needs at least three scales")
    if np.any(y <= 0):
        raise ValueError("log-slope needs positive values")
    ly = np.log2(y)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(math.sqrt(np.mean(resid**2)))


@dataclass
class ProbeReport:
    name: str
    scale_kind: str  # "j" or "N"
    scales: list[float]
    max_ratio: list[float]
    median_ratio: list[float]
    samples: list[int]
    seed: int | None
    slope: float | None = None
    residual: float | None = None
    series: dict[str, list[float]] = field(default_factory=dict)
    series_slopes: dict[str, float] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_values(cls, name: str, scales: Sequence[float], ratios: Sequence[Sequence[float]],
                    scale_kind: str = "j", seed: int | None = None, **kw) -> "ProbeReport":
        maxes, meds, counts = [], [], []
        for r in ratios:
            r = np.asarray(r, dtype=float)
            if r.size == 0:
                raise ValueError("every scale needs at least one sample")
            if np.any(~np.isfinite(r)) or np.any(r < 0):
                raise ValueError("ratios must be finite and nonnegative")
            maxes.append(float(r.max()))
            meds.append(float(np.median(r)))
            counts.append(int(r.size))
        rep = cls(name=name, scale_kind=scale_kind, scales=[float(s) for s in scales],
                  max_ratio=maxes, median_ratio=meds, samples=counts, seed=seed, **kw)
        if len(scales) >= 3 and all(m > 0 for m in maxes):
            xs = [math.log2(s) for s in scales] if scale_kind == "N" else list(scales)
            rep.slope, rep.residual = fit_log2_slope(xs, maxes)
        return rep

    def growth_factor(self) -> float:
        """Largest ``max_ratio[b] / max_ratio[a]`` over ordered pairs ``a < b``."""
        m = self.max_ratio
        best = 0.0 if len(m) > 1 else 1.0
        for a in range(len(m)):
            for b in range(a + 1, len(m)):
                if m[a] > 0:
                    best = max(best, m[b] / m[a])
                elif m[b] > 0:
                    return math.inf
        return best

    def bounded(self, factor: float = 2.0) -> bool:
        return self.growth_factor() <= factor

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scale", "max_ratio", "median_ratio", "samples"])
        for row in zip(self.scales, self.max_ratio, self.median_ratio, self.samples):
            w.writerow([repr(row[0]), repr(row[1]), repr(row[2]), row[3]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scale_kind": self.scale_kind,
            "scales": self.scales,
            "max_ratio": self.max_ratio,
            "median_ratio": self.median_ratio,
            "samples": self.samples,
            "seed": self.seed,
            "slope": self.slope,
            "residual": self.residual,
            "series": self.series,
            "series_slopes": self.series_slopes,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

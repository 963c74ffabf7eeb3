"""Pseudo-observations and the empirical copula built from them.

Given fitted (or exact) conditional margins, each observation is mapped to
the pair (F1(Y1_i | X_i), F2(Y2_i | X_i)). The empirical copula of those
pairs uses the generalized inverse of each coordinate's empirical CDF as a
rank threshold; the indicator convention is <= throughout, and ties are
counted, not split.

Arguments u = 0 are rejected: the generalized inverse of an ECDF at 0 is
the infimum of the real line. The experiments only ever evaluate inside
a central band of the unit square.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StepEcdf",
    "ecdf",
    "PseudoObservations",
    "pseudo_obs",
    "empirical_copula",
    "copula_margin_identity",
    "read_xyy_csv",
    "pseudo_obs_to_csv",
]


@dataclass(frozen=True)
class StepEcdf:
    """Right-continuous empirical distribution function of a sample."""

    sorted_values: np.ndarray
    n: int

    def __call__(self, v):
        """Fraction of sample values <= v."""
        out = np.searchsorted(self.sorted_values, np.asarray(v, dtype=float), side="right") / self.n
        return out if np.ndim(v) else float(out)

    def inverse(self, u):
        """Generalized inverse: the ceil(n*u)-th order statistic, u in (0, 1]."""
        us = np.asarray(u, dtype=float)
        if np.any(us <= 0.0) or np.any(us > 1.0):
            raise ValueError("generalized inverse of an ECDF requires u in (0, 1]")
        idx = np.ceil(self.n * us).astype(int) - 1
        out = self.sorted_values[idx]
        return out if np.ndim(u) else float(out)


def ecdf(values) -> StepEcdf:
    """Empirical CDF of a nonempty sample."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot build an ECDF from an empty sample")
    return StepEcdf(sorted_values=np.sort(arr), n=arr.size)


@dataclass(frozen=True)
class PseudoObservations:
    """Conditional-PIT pairs feeding the empirical copula.

    Pairs stay in input order and are never deduplicated, so estimated and
    oracle versions built from the same draws stay aligned by index.
    Values outside [0, 1] are permitted for estimated margins, which are
    not clamped upstream.
    """

    v1: np.ndarray
    v2: np.ndarray
    provenance: str  # "estimated" or "oracle"

    def __post_init__(self):
        if self.v1.shape != self.v2.shape or self.v1.ndim != 1 or self.v1.size < 1:
            raise ValueError("pseudo-observations must be two aligned nonempty vectors")
        if not (np.all(np.isfinite(self.v1)) and np.all(np.isfinite(self.v2))):
            raise ValueError("pseudo-observations contain non-finite values")
        if self.provenance not in ("estimated", "oracle"):
            raise ValueError(f"provenance must be 'estimated' or 'oracle', got {self.provenance!r}")

    @property
    def n(self) -> int:
        return self.v1.size


def pseudo_obs(x, y1, y2, margin1, margin2, provenance: str = "estimated") -> PseudoObservations:
    """Map sample triples through two conditional margins.

    ``margin1`` and ``margin2`` need a ``cdf(y, x)`` method accepting
    aligned arrays (a fitted estimator or an exact reference margin).
    Degenerate-design errors from fitted margins propagate unchanged,
    carrying the offending observation index.
    """
    x = np.asarray(x, dtype=float)
    v1 = np.asarray(margin1.cdf(y1, x), dtype=float)
    v2 = np.asarray(margin2.cdf(y2, x), dtype=float)
    return PseudoObservations(v1=v1, v2=v2, provenance=provenance)


def empirical_copula(p: PseudoObservations, u1: float, u2: float) -> float:
    """Empirical copula of the pseudo-observations at (u1, u2) in (0, 1]^2."""
    t1 = ecdf(p.v1).inverse(u1)
    t2 = ecdf(p.v2).inverse(u2)
    return float(np.mean((p.v1 <= t1) & (p.v2 <= t2)))


def copula_margin_identity(p: PseudoObservations, u1: float) -> float:
    """Empirical copula evaluated on the upper edge, C_n(u1, 1).

    Equals ceil(n*u1)/n exactly when the first coordinate has no ties, so
    it sits within 1/n of u1.
    """
    return empirical_copula(p, u1, 1.0)


def read_xyy_csv(path):
    """Read sample triples from a CSV file with header ``x,y1,y2``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["x", "y1", "y2"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(f"expected CSV header 'x,y1,y2' in {path}, got {reader.fieldnames}")
        rows = [(float(r["x"]), float(r["y1"]), float(r["y2"])) for r in reader]
    if not rows:
        raise ValueError(f"no data rows in {path}")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def pseudo_obs_to_csv(p: PseudoObservations, path):
    """Dump pseudo-observations as CSV rows ``v1,v2,provenance``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["v1", "v2", "provenance"])
        for a, b in zip(p.v1, p.v2):
            writer.writerow([f"{a:.17g}", f"{b:.17g}", p.provenance])

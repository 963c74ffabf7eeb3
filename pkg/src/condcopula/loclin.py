"""Doubly smoothed local-linear estimation of a conditional CDF.

The estimator fits, for each evaluation point (y, x), a weighted least
squares line a + b(X_i - x) through the smoothed indicators
phi_h2(y, Y_i), with weights K((x - X_i)/h1). Its intercept estimates
F(y | x). With the window moments

    p_k(x)    = (n h1)^-1 sum_i w_k((x - X_i)/h1),        w_k(u) = u^k K(u),
    Q_k(y, x) = (n h1)^-1 sum_i phi_h2(y, Y_i) w_k((x - X_i)/h1),

the intercept has the closed form

    F_hat(y | x) = (Q_0 p_2 - Q_1 p_1) / (p_0 p_2 - p_1^2)

whenever the design determinant p_0 p_2 - p_1^2 is positive. Everything
here works off that closed form; compact kernel support makes each
evaluation a windowed sum over the x-sorted sample.

Estimates are deliberately NOT clamped to [0, 1]: downstream ranking is
invariant to monotone distortions of extreme values, and clamping would
hide estimator pathologies from the diagnostics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .kernels import BIWEIGHT, TRIWEIGHT, Kernel, SmoothedIndicator, moment_weight

__all__ = [
    "Bandwidths",
    "ConditionalCdfFit",
    "DegenerateDesign",
    "NoCrossing",
    "MonotonicityReport",
    "read_xy_csv",
    "monotonicity_reports_to_csv",
]

_BLOCK = 512  # evaluation points per vectorized pass; bounds temp memory


class DegenerateDesign(ArithmeticError):
    """Local design matrix is numerically rank deficient at some x.

    Signals a too-small x-bandwidth or an (almost) empty kernel window;
    carries the first offending evaluation index when raised from a batch.
    """

    def __init__(self, x, determinant, index=None):
        self.x = x
        self.determinant = determinant
        self.index = index
        at = f" (evaluation index {index})" if index is not None else ""
        super().__init__(
            f"degenerate local-linear design at x={x!r}: determinant {determinant!r}{at}"
        )


class NoCrossing(RuntimeError):
    """The estimated CDF never reaches the requested level on the grid."""

    def __init__(self, u, x):
        self.u = u
        self.x = x
        super().__init__(f"estimated CDF never reaches u={u} on the inversion grid at x={x}")


@dataclass(frozen=True)
class Bandwidths:
    """Bandwidth pair: h1 localises in x, h2 smooths the indicator in y."""

    h1: float
    h2: float

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 > 0):
            raise ValueError(f"bandwidths must be positive, got h1={self.h1}, h2={self.h2}")


@dataclass(frozen=True)
class MonotonicityReport:
    """Minimum estimated density over a central band of y-values at one x."""

    x: float
    min_density: float
    violation: bool


class ConditionalCdfFit:
    """Fitted smoothed local-linear conditional CDF for one response.

    Immutable after construction; every evaluation is a pure function of
    (sample, bandwidths), safe for concurrent use.

    Parameters
    ----------
    x, y : array-like, same length n >= 2, finite
        Covariate and response observations.
    bandwidths : Bandwidths
    kernel_x : Kernel
        Localising kernel; needs two continuous derivatives.
    kernel_y : Kernel
        Indicator-smoothing kernel; needs one continuous derivative.
    grid_size : int
        Number of inversion-grid points spanning [min y - h2, max y + h2];
        the estimate is constant outside that span.
    """

    def __init__(self, x, y, bandwidths: Bandwidths,
                 kernel_x: Kernel = TRIWEIGHT, kernel_y: Kernel = BIWEIGHT,
                 grid_size: int = 512):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
            raise ValueError("x and y must be one-dimensional arrays of equal length")
        if x.size < 2:
            raise ValueError(f"need at least 2 observations, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample contains non-finite values")
        order = np.argsort(x, kind="stable")
        self.x = x[order]
        self.y = y[order]
        self.n = x.size
        self.bandwidths = bandwidths
        self.kernel_x = kernel_x
        self.kernel_y = kernel_y
        self.indicator = SmoothedIndicator(kernel_y, bandwidths.h2)
        h2 = bandwidths.h2
        self.grid = np.linspace(self.y.min() - h2, self.y.max() + h2, grid_size)
        # Relative determinant floor: the positivity of the design
        # determinant is only an asymptotic guarantee, so a finite-sample
        # threshold is needed to decide when to refuse an evaluation.
        pilot = np.linspace(self.x[0], self.x[-1], 65)
        p0 = self._moments(pilot, (0,))[0]
        self.eps_det = 1e-12 * float(np.max(p0)) ** 2

    # -- windowed sums ----------------------------------------------------

    def _window(self, xb):
        """Index/mask/scaled-distance triple for a block of x points."""
        h1 = self.bandwidths.h1
        lo = np.searchsorted(self.x, xb - h1, side="left")
        hi = np.searchsorted(self.x, xb + h1, side="right")
        width = max(int(np.max(hi - lo)), 1) if xb.size else 1
        idx = lo[:, None] + np.arange(width)[None, :]
        mask = idx < hi[:, None]
        idx = np.minimum(idx, self.n - 1)
        u = (xb[:, None] - self.x[idx]) / h1
        return idx, mask, u

    def _moments(self, xb, ks, deriv: int = 0):
        """p_k(x) (or its x-derivative) for each k in ks, over a block."""
        h1 = self.bandwidths.h1
        _, mask, u = self._window(xb)
        scale = self.n * h1 ** (1 + deriv)
        return [np.sum(moment_weight(self.kernel_x, k, u, deriv) * mask, axis=1) / scale
                for k in ks]

    def p_hat(self, k: int, x, deriv: int = 0):
        """Windowed moment sum p_k at x; zero when the window is empty."""
        xb = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.concatenate(
            [self._moments(xb[s:s + _BLOCK], (k,), deriv)[0] for s in range(0, xb.size, _BLOCK)]
        )
        return out if np.ndim(x) else float(out[0])

    def _smoothed_sums(self, yb, xb, ks, deriv: int = 0, density: bool = False):
        """Q_k (density=False) or q_k (density=True) over a block of (y, x)."""
        h1, h2 = self.bandwidths.h1, self.bandwidths.h2
        idx, mask, u = self._window(xb)
        t = (yb[:, None] - self.y[idx]) / h2
        if density:
            smooth = self.kernel_y(t) / h2
        else:
            smooth = self.kernel_y.integral(t)
        scale = self.n * h1 ** (1 + deriv)
        return [np.sum(smooth * moment_weight(self.kernel_x, k, u, deriv) * mask, axis=1) / scale
                for k in ks]

    def Q_hat(self, k: int, y, x):
        """Windowed sum of smoothed indicators against the k-th weight."""
        yb, xb, scalar = self._broadcast(y, x)
        out = np.concatenate(
            [self._smoothed_sums(yb[s:s + _BLOCK], xb[s:s + _BLOCK], (k,))[0]
             for s in range(0, xb.size, _BLOCK)]
        )
        return float(out[0]) if scalar else out

    def q_hat(self, k: int, y, x):
        """Windowed sum of kernel densities against the k-th weight."""
        yb, xb, scalar = self._broadcast(y, x)
        out = np.concatenate(
            [self._smoothed_sums(yb[s:s + _BLOCK], xb[s:s + _BLOCK], (k,), density=True)[0]
             for s in range(0, xb.size, _BLOCK)]
        )
        return float(out[0]) if scalar else out

    @staticmethod
    def _broadcast(y, x):
        yb = np.atleast_1d(np.asarray(y, dtype=float))
        xb = np.atleast_1d(np.asarray(x, dtype=float))
        scalar = np.ndim(y) == 0 and np.ndim(x) == 0
        yb, xb = np.broadcast_arrays(yb, xb)
        return yb.ravel(), xb.ravel(), scalar

    # -- estimator surface -------------------------------------------------

    def determinant(self, x):
        """Design determinant p_0 p_2 - p_1^2 at x (sign reported, not enforced)."""
        xb = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xb.size)
        for s in range(0, xb.size, _BLOCK):
            p0, p1, p2 = self._moments(xb[s:s + _BLOCK], (0, 1, 2))
            out[s:s + _BLOCK] = p0 * p2 - p1 * p1
        return out if np.ndim(x) else float(out[0])

    def cdf(self, y, x, on_degenerate: str = "raise"):
        """Estimated F(y | x); scalars or equal-shape arrays.

        ``on_degenerate`` is "raise" (default) or "nan"; the latter marks
        degenerate evaluations with NaN instead of raising, which lets
        callers do their own accounting.
        """
        if on_degenerate not in ("raise", "nan"):
            raise ValueError(f"on_degenerate must be 'raise' or 'nan', got {on_degenerate!r}")
        yb, xb, scalar = self._broadcast(y, x)
        out = np.empty(xb.size)
        for s in range(0, xb.size, _BLOCK):
            num, det = self._cdf_block(yb[s:s + _BLOCK], xb[s:s + _BLOCK])
            bad = det <= self.eps_det
            if np.any(bad):
                if on_degenerate == "raise":
                    i = int(np.argmax(bad))
                    raise DegenerateDesign(xb[s + i], float(det[i]), index=s + i)
                det = np.where(bad, np.nan, det)
            out[s:s + _BLOCK] = num / det
        return float(out[0]) if scalar else out

    def _cdf_block(self, yb, xb):
        """Numerator and determinant of the closed form, one fused pass."""
        h1, h2 = self.bandwidths.h1, self.bandwidths.h2
        idx, mask, u = self._window(xb)
        k0 = self.kernel_x(u) * mask
        w1 = u * k0
        w2 = u * w1
        p0 = k0.sum(axis=1)
        p1 = w1.sum(axis=1)
        p2 = w2.sum(axis=1)
        phi = self.kernel_y.integral((yb[:, None] - self.y[idx]) / h2)
        q0 = (phi * k0).sum(axis=1)
        q1 = (phi * w1).sum(axis=1)
        scale = (self.n * h1) ** 2
        return (q0 * p2 - q1 * p1) / scale, (p0 * p2 - p1 * p1) / scale

    def density(self, y, x):
        """Estimated conditional density f(y | x), the y-derivative of cdf."""
        yb, xb, scalar = self._broadcast(y, x)
        out = np.empty(xb.size)
        for s in range(0, xb.size, _BLOCK):
            ybs, xbs = yb[s:s + _BLOCK], xb[s:s + _BLOCK]
            p0, p1, p2 = self._moments(xbs, (0, 1, 2))
            det = p0 * p2 - p1 * p1
            self._check_det(det, xbs, offset=s)
            q0, q1 = self._smoothed_sums(ybs, xbs, (0, 1), density=True)
            out[s:s + _BLOCK] = (q0 * p2 - q1 * p1) / det
        return float(out[0]) if scalar else out

    def cdf_dx(self, y, x, order: int = 1):
        """Analytic x-derivative (order 1 or 2) of the estimated CDF."""
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order}")
        yb, xb, scalar = self._broadcast(y, x)
        out = np.empty(xb.size)
        for s in range(0, xb.size, _BLOCK):
            ybs, xbs = yb[s:s + _BLOCK], xb[s:s + _BLOCK]
            p0, p1, p2 = self._moments(xbs, (0, 1, 2))
            dp0, dp1, dp2 = self._moments(xbs, (0, 1, 2), deriv=1)
            q0, q1 = self._smoothed_sums(ybs, xbs, (0, 1))
            dq0, dq1 = self._smoothed_sums(ybs, xbs, (0, 1), deriv=1)
            den = p0 * p2 - p1 * p1
            self._check_det(den, xbs, offset=s)
            num = q0 * p2 - q1 * p1
            dnum = dq0 * p2 + q0 * dp2 - dq1 * p1 - q1 * dp1
            dden = dp0 * p2 + p0 * dp2 - 2.0 * p1 * dp1
            first = (dnum * den - num * dden) / den**2
            if order == 1:
                out[s:s + _BLOCK] = first
                continue
            d2p0, d2p1, d2p2 = self._moments(xbs, (0, 1, 2), deriv=2)
            d2q0, d2q1 = self._smoothed_sums(ybs, xbs, (0, 1), deriv=2)
            d2num = (d2q0 * p2 + 2.0 * dq0 * dp2 + q0 * d2p2
                     - d2q1 * p1 - 2.0 * dq1 * dp1 - q1 * d2p1)
            d2den = d2p0 * p2 + 2.0 * dp0 * dp2 + p0 * d2p2 - 2.0 * (dp1**2 + p1 * d2p1)
            out[s:s + _BLOCK] = (d2num * den - num * d2den) / den**2 - 2.0 * dden * first / den
        return float(out[0]) if scalar else out

    def _check_det(self, det, xbs, offset: int):
        bad = det <= self.eps_det
        if np.any(bad):
            i = int(np.argmax(bad))
            raise DegenerateDesign(xbs[i], float(det[i]), index=offset + i)

    # -- inversion ---------------------------------------------------------

    def cdf_on_grid(self, x: float) -> np.ndarray:
        """Estimated CDF along the inversion grid at a single x."""
        return self.cdf(self.grid, np.full_like(self.grid, float(x)))

    def quantile(self, u, x: float):
        """Generalized inverse: smallest grid-bracketed y with F(y|x) >= u.

        Implements the first-upcrossing convention, so it is well defined
        even when the estimate is not monotone in y. The bracketing grid
        cell is refined by bisection to 1e-10 of the grid span.

        Raises ``NoCrossing`` when the estimate never reaches u on the
        grid, and ``DegenerateDesign`` when the design fails at x.
        """
        scalar = np.ndim(u) == 0
        us = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any(us <= 0.0) or np.any(us >= 1.0):
            raise ValueError("quantile level must lie in the open interval (0, 1)")
        x = float(x)
        values = self.cdf_on_grid(x)
        evaluate = self._point_evaluator(x)
        tol = 1e-10 * (self.grid[-1] - self.grid[0])
        out = np.empty(us.size)
        for i, level in enumerate(us):
            hits = np.nonzero(values >= level)[0]
            if hits.size == 0:
                raise NoCrossing(level, x)
            j = int(hits[0])
            if j == 0:
                out[i] = self.grid[0]
                continue
            lo, hi = self.grid[j - 1], self.grid[j]
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if evaluate(mid) >= level:
                    hi = mid
                else:
                    lo = mid
            out[i] = hi
        return float(out[0]) if scalar else out

    def _point_evaluator(self, x: float):
        """Cheap single-y CDF evaluator with the x-window precomputed."""
        h1, h2 = self.bandwidths.h1, self.bandwidths.h2
        xb = np.array([x])
        idx, mask, u = self._window(xb)
        k0 = (self.kernel_x(u) * mask)[0]
        w1 = u[0] * k0
        p0, p1, p2 = k0.sum(), w1.sum(), (u[0] * w1).sum()
        det = p0 * p2 - p1 * p1
        if det / (self.n * h1) ** 2 <= self.eps_det:
            raise DegenerateDesign(x, det / (self.n * h1) ** 2)
        ywin = self.y[idx[0]]

        def evaluate(yv: float) -> float:
            phi = self.kernel_y.integral((yv - ywin) / h2)
            return (np.dot(phi, k0) * p2 - np.dot(phi, w1) * p1) / det

        return evaluate

    def monotonicity_check(self, x: float, gamma_band=(0.1, 0.9)) -> MonotonicityReport:
        """Scan the estimated density over the central band of y at x.

        The band is [quantile(lo), quantile(hi)] for the given probability
        levels, intersected with the inversion grid. A nonpositive density
        anywhere in the band, or a degenerate design, flags a violation of
        the strict-monotonicity working assumption.
        """
        lo_level, hi_level = gamma_band
        try:
            q_lo, q_hi = self.quantile(np.array([lo_level, hi_level]), x)
        except (DegenerateDesign, NoCrossing):
            return MonotonicityReport(x=float(x), min_density=float("nan"), violation=True)
        band = self.grid[(self.grid >= q_lo) & (self.grid <= q_hi)]
        if band.size == 0:
            band = np.array([0.5 * (q_lo + q_hi)])
        dens = self.density(band, np.full_like(band, float(x)))
        min_density = float(np.min(dens))
        return MonotonicityReport(x=float(x), min_density=min_density,
                                  violation=min_density <= 0.0)

    @classmethod
    def from_csv(cls, path, bandwidths: Bandwidths, **kwargs) -> "ConditionalCdfFit":
        x, y = read_xy_csv(path)
        return cls(x, y, bandwidths, **kwargs)


def read_xy_csv(path):
    """Read a two-column sample from a CSV file with header ``x,y``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "y"]:
            raise ValueError(f"expected CSV header 'x,y' in {path}, got {reader.fieldnames}")
        rows = [(float(r["x"]), float(r["y"])) for r in reader]
    if not rows:
        raise ValueError(f"no data rows in {path}")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1]


def monotonicity_reports_to_csv(reports, path):
    """Write monotonicity reports as CSV rows ``x,min_density,violation_flag``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "min_density", "violation_flag"])
        for rep in reports:
            writer.writerow([f"{rep.x:.17g}", f"{rep.min_density:.17g}", int(rep.violation)])

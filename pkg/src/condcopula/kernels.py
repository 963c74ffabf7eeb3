# kernels.py
# Compactly supported polynomial kernels, their derivatives and
# antiderivatives, the smoothed step function used in place of the
# indicator 1{Y <= y}, and the moment weights u^k K(u) that enter the
# local-linear normal equations.
#
# Conventions:
#   all kernels live on the open interval (-1, 1) and vanish outside;
#   k_h(t) = K(t/h) / h for a bandwidth h > 0.

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "KernelFamily",
    "Kernel",
    "TRIWEIGHT",
    "BIWEIGHT",
    "SmoothedIndicator",
    "moment_weight",
    "folded_mean",
    "folded_variance",
]


class KernelFamily(str, Enum):
    """Closed set of supported kernel families.

    The estimator requires the x-localising kernel to be twice continuously
    differentiable and the y-smoothing kernel once; arbitrary callables
    cannot be checked for that, so the families are fixed.
    """

    TRIWEIGHT = "triweight"
    BIWEIGHT = "biweight"


# Polynomial coefficients on (-1, 1), highest degree last (numpy order).
# triweight: (35/32)(1-u^2)^3, C^2 on all of R
# biweight:  (15/16)(1-u^2)^2, C^1 on all of R
_POLY = {
    KernelFamily.TRIWEIGHT: np.array([35 / 32, 0.0, -105 / 32, 0.0, 105 / 32, 0.0, -35 / 32]),
    KernelFamily.BIWEIGHT: np.array([15 / 16, 0.0, -15 / 8, 0.0, 15 / 16]),
}
# Highest derivative that is still continuous at the support boundary.
_MAX_ORDER = {KernelFamily.TRIWEIGHT: 2, KernelFamily.BIWEIGHT: 1}


@dataclass(frozen=True)
class Kernel:
    """Symmetric probability kernel supported on (-1, 1).

    Evaluation is pure and instances are immutable, so kernels can be
    shared freely across threads.
    """

    family: KernelFamily

    @property
    def support_radius(self) -> float:
        return 1.0

    @property
    def max_derivative_order(self) -> int:
        return _MAX_ORDER[self.family]

    def __call__(self, u, order: int = 0):
        """Evaluate the kernel or one of its derivatives.

        Parameters
        ----------
        u : array-like
            Points of evaluation.
        order : int
            Derivative order; 0 for the kernel itself.

        Returns
        -------
        ndarray or float
            Exact polynomial value inside (-1, 1), exactly 0 outside.
        """
        if not 0 <= order <= self.max_derivative_order:
            raise ValueError(
                f"derivative order {order} not supported for {self.family.value} "
                f"(max {self.max_derivative_order})"
            )
        u = np.asarray(u, dtype=float)
        coeffs = np.polynomial.polynomial.polyder(_POLY[self.family], order) if order else _POLY[self.family]
        # Clipping keeps polyval bounded; the polynomial and all supported
        # derivatives vanish at +-1, so the masked value is exact.
        out = np.where(
            np.abs(u) < 1.0,
            np.polynomial.polynomial.polyval(np.clip(u, -1.0, 1.0), coeffs),
            0.0,
        )
        return out if out.ndim else float(out)

    def integral(self, u):
        """Integral of the kernel from -infinity to u (clamped to [0, 1])."""
        u = np.asarray(u, dtype=float)
        uc = np.clip(u, -1.0, 1.0)
        anti = np.polynomial.polynomial.polyint(_POLY[self.family])
        out = 0.5 + np.polynomial.polynomial.polyval(uc, anti)
        return out if out.ndim else float(out)


TRIWEIGHT = Kernel(KernelFamily.TRIWEIGHT)
BIWEIGHT = Kernel(KernelFamily.BIWEIGHT)


def moment_weight(kernel: Kernel, k: int, u, order: int = 0):
    """Evaluate u^k K(u) or one of its derivatives.

    These weights play the role of kernels in the windowed sums of the
    local-linear estimator; derivatives follow from the product rule and
    share the kernel's support and order limits.
    """
    if k not in (0, 1, 2, 3):
        raise ValueError(f"moment index must be in 0..3, got {k}")
    if not 0 <= order <= kernel.max_derivative_order:
        raise ValueError(
            f"derivative order {order} not supported for {kernel.family.value} "
            f"(max {kernel.max_derivative_order})"
        )
    u = np.asarray(u, dtype=float)
    poly = np.zeros(k + 1)
    poly[k] = 1.0
    poly = np.polynomial.polynomial.polymul(poly, _POLY[kernel.family])
    if order:
        poly = np.polynomial.polynomial.polyder(poly, order)
    out = np.where(
        np.abs(u) < 1.0,
        np.polynomial.polynomial.polyval(np.clip(u, -1.0, 1.0), poly),
        0.0,
    )
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SmoothedIndicator:
    """Smooth surrogate for the step function y -> 1{Y <= y}.

    ``phi(y, Y)`` is the mass of the kernel density centred at Y and scaled
    by the bandwidth that falls below y. It rises from 0 at y = Y - h to 1
    at y = Y + h and its y-derivative is the scaled kernel itself.
    """

    kernel: Kernel = BIWEIGHT
    h: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")

    def __call__(self, y, Y):
        """phi_h(y, Y), the smoothed indicator in [0, 1]."""
        y = np.asarray(y, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return self.kernel.integral((y - Y) / self.h)

    def slope(self, y, Y):
        """d/dy phi_h(y, Y), i.e. the kernel density k_h(y - Y)."""
        y = np.asarray(y, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = self.kernel((y - Y) / self.h) / self.h
        return out if np.ndim(out) else float(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def folded_mean(kernel: Kernel) -> float:
    """Mean of the kernel folded onto [0, 1], i.e. 2 * int_0^1 u k(u) du.

    Diagnostic constant for the lower bound on the local-linear design
    determinant; not used in estimation.
    """
    u = 0.5 * (_GL_NODES + 1.0)
    return float(np.sum(_GL_WEIGHTS * u * kernel(u)))


def folded_variance(kernel: Kernel) -> float:
    """Variance-like spread 2 * int_0^1 (u - folded_mean)^2 k(u) du."""
    a = folded_mean(kernel)
    u = 0.5 * (_GL_NODES + 1.0)
    return float(np.sum(_GL_WEIGHTS * (u - a) ** 2 * kernel(u)))

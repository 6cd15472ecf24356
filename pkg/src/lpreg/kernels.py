"""Kernel weight functions and their moment constants.

Only the Gaussian kernel is implemented; the experiments this library
reproduces all use it.  Weights below ``WEIGHT_FLOOR`` are truncated to
exactly zero so each local fit touches a bounded neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)

# Kernel weights smaller than this are treated as exactly zero.
WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class Kernel:
    """A symmetric nonnegative kernel, selectable by family name."""

    family: str = "gaussian"

    def __post_init__(self) -> None:
        if self.family != "gaussian":
            raise NotImplementedError(f"unsupported kernel family: {self.family!r}")

    def evaluate(self, u):
        """Unscaled kernel K(u) at scaled distance u."""
        u = np.asarray(u, dtype=float)
        out = np.exp(-0.5 * u * u) / SQRT_2PI
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelConstants:
    """Moment integrals entering asymptotic bias/variance formulas.

    mu2 = int u^2 K(u) du, r_k = int K(u)^2 du,
    mu2_ksq = int u^2 K(u)^2 du, mu4 = int u^4 K(u) du.
    """

    mu2: float
    r_k: float
    mu2_ksq: float
    mu4: float


GAUSSIAN = Kernel("gaussian")

_GAUSSIAN_CONSTANTS = KernelConstants(
    mu2=1.0,
    r_k=1.0 / (2.0 * np.sqrt(np.pi)),
    mu2_ksq=1.0 / (4.0 * np.sqrt(np.pi)),
    mu4=3.0,
)


def kernel_weight(distance, bandwidth: float, kernel: Kernel = GAUSSIAN):
    """Scaled weight K_h(d) = K(d / h) / h, with sub-floor weights zeroed."""
    if bandwidth <= 0.0 or not np.isfinite(bandwidth):
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    w = np.asarray(kernel.evaluate(np.asarray(distance, float) / bandwidth)) / bandwidth
    w = np.where(w < WEIGHT_FLOOR, 0.0, w)
    return w if w.ndim else float(w)


def kernel_constants(kernel: Kernel = GAUSSIAN) -> KernelConstants:
    """Analytic moment constants of the kernel."""
    if kernel.family == "gaussian":
        return _GAUSSIAN_CONSTANTS
    raise NotImplementedError(f"unsupported kernel family: {kernel.family!r}")

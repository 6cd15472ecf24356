"""Local constant/linear Lp regression on a grid, plus asymptotic oracles.

At each evaluation point x the estimator minimizes

    sum_i |y_i - b0 - b1 (x_i - x)|^p K_h(x_i - x)

(the b1 term only for degree "linear"); b0 estimates m(x) and b1
estimates m'(x).  The 2D variant fits a local plane under a product
kernel.  ``asymptotic_moments`` evaluates the leading bias/variance
terms of the estimator's limiting normal distribution, used as an
analytic oracle in validation experiments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import GAUSSIAN, Kernel, KernelConstants, kernel_weight
from .lpsolve import lp_minimize_batch

DEFAULT_GRID_SIZE = 101
DEFAULT_GRID_SIZE_2D = 21

DEGREE_CONSTANT = "constant"
DEGREE_LINEAR = "linear"


@dataclass(frozen=True)
class Dataset1D:
    """Paired predictor/response samples for curve estimation."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, float)
        y = np.asarray(self.y, float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size < 2:
            raise ValueError("need at least two observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        if np.ptp(x) == 0.0:
            raise ValueError("x values are all identical")


@dataclass(frozen=True)
class Dataset2D:
    """Two predictors plus response for surface estimation."""

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x1 = np.asarray(self.x1, float)
        x2 = np.asarray(self.x2, float)
        y = np.asarray(self.y, float)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "y", y)
        if not (x1.ndim == 1 and x1.shape == x2.shape == y.shape):
            raise ValueError("x1, x2 and y must be 1-d arrays of equal length")
        if x1.size < 3:
            raise ValueError("need at least three observations")
        for a in (x1, x2, y):
            if not np.all(np.isfinite(a)):
                raise ValueError("x1, x2 and y must be finite")
        centered = np.column_stack([x1 - x1.mean(), x2 - x2.mean()])
        if np.linalg.matrix_rank(centered) < 2:
            raise ValueError("design points are collinear")


@dataclass(frozen=True)
class FitSpec:
    """Degree, norm exponent, bandwidth, kernel and evaluation grid."""

    degree: str = DEGREE_LINEAR
    exponent: float = 2.0
    bandwidth: float = 0.1
    kernel: Kernel = GAUSSIAN
    grid: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.degree not in (DEGREE_CONSTANT, DEGREE_LINEAR):
            raise ValueError(f"degree must be 'constant' or 'linear', got {self.degree!r}")
        if not np.isfinite(self.exponent) or self.exponent < 1.0:
            raise ValueError(f"exponent must satisfy p >= 1, got {self.exponent!r}")
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")
        if self.grid is not None:
            g = np.asarray(self.grid, float)
            object.__setattr__(self, "grid", g)
            if not np.all(np.isfinite(g)):
                raise ValueError("grid must be finite")
            if g.ndim == 1 and np.any(np.diff(g) < 0):
                raise ValueError("1-d grid must be sorted ascending")


@dataclass(frozen=True)
class FitDiagnostics:
    """Per-grid-point solver summaries."""

    objective: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    clamped: np.ndarray
    degenerate: np.ndarray


@dataclass(frozen=True)
class FitResult:
    """Estimates over the grid; m1_hat present only for degree 'linear' (1D)."""

    grid: np.ndarray
    m_hat: np.ndarray
    m1_hat: Optional[np.ndarray]
    interior_mask: np.ndarray
    diagnostics: FitDiagnostics


def default_grid(x: np.ndarray, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Equally spaced evaluation points spanning the design range."""
    return np.linspace(float(np.min(x)), float(np.max(x)), size)


def default_grid_2d(
    x1: np.ndarray, x2: np.ndarray, size: int = DEFAULT_GRID_SIZE_2D
) -> np.ndarray:
    """Cartesian product grid (size^2, 2) spanning both design ranges."""
    g1 = np.linspace(float(np.min(x1)), float(np.max(x1)), size)
    g2 = np.linspace(float(np.min(x2)), float(np.max(x2)), size)
    a, b = np.meshgrid(g1, g2, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def _constant_starts(x: np.ndarray, y: np.ndarray, grid: np.ndarray, h: float,
                     w: np.ndarray) -> np.ndarray:
    """Window mean of y within 2h of each grid point, with fallbacks."""
    inside = np.abs(x[None, :] - grid[:, None]) < 2.0 * h
    counts = inside.sum(axis=1)
    sums = inside @ y
    starts = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    empty = counts == 0
    if np.any(empty):
        wsum = w[empty].sum(axis=1)
        wmean = np.where(wsum > 0, (w[empty] * y[None, :]).sum(axis=1) / np.maximum(wsum, 1e-300),
                         float(np.mean(y)))
        starts[empty] = wmean
    return starts[:, None]


def _run_batch(y_t, X, w, spec: FitSpec, starts) -> dict:
    if spec.exponent == 2.0:
        return lp_minimize_batch(y_t, X, w, 2.0, starts)
    return lp_minimize_batch(y_t, X, w, spec.exponent, starts)


def fit_local_1d(data: Dataset1D, spec: FitSpec) -> FitResult:
    """Local constant or local linear Lp fit at each grid point."""
    x, y = data.x, data.y
    grid = spec.grid if spec.grid is not None else default_grid(x)
    if grid.ndim != 1:
        raise ValueError("1-d fits need a 1-d grid")
    h = spec.bandwidth
    G, n = grid.size, x.size

    d = x[None, :] - grid[:, None]
    w = np.asarray(kernel_weight(d, h, spec.kernel))
    y_t = np.broadcast_to(y, (G, n)).copy()

    if spec.degree == DEGREE_CONSTANT:
        X = np.ones((G, n, 1))
        starts = _constant_starts(x, y, grid, h, w)
    else:
        X = np.stack([np.ones((G, n)), d], axis=2)
        starts = lp_minimize_batch(y_t, X, w, 2.0, np.zeros((G, 2)))["beta"]

    out = _run_batch(y_t, X, w, spec, starts)

    lo, hi = float(np.min(x)), float(np.max(x))
    interior = (grid > lo + h) & (grid < hi - h)
    diag = FitDiagnostics(
        objective=out["objective"],
        iterations=out["iterations"],
        converged=out["converged"],
        clamped=out["clamped"],
        degenerate=out["degenerate"],
    )
    m1 = out["beta"][:, 1] if spec.degree == DEGREE_LINEAR else None
    return FitResult(grid=grid, m_hat=out["beta"][:, 0], m1_hat=m1,
                     interior_mask=interior, diagnostics=diag)


def fit_local_2d(data: Dataset2D, spec: FitSpec) -> FitResult:
    """Local linear Lp plane fit at each 2D grid point under a product kernel."""
    if spec.degree != DEGREE_LINEAR:
        raise ValueError("2D fits support degree 'linear' only")
    x1, x2, y = data.x1, data.x2, data.y
    grid = spec.grid if spec.grid is not None else default_grid_2d(x1, x2)
    grid = np.asarray(grid, float)
    if grid.ndim != 2 or grid.shape[1] != 2:
        raise ValueError("2D fits need a (G, 2) grid")
    h = spec.bandwidth
    G, n = grid.shape[0], x1.size

    d1 = x1[None, :] - grid[:, 0][:, None]
    d2 = x2[None, :] - grid[:, 1][:, None]
    w = np.asarray(kernel_weight(d1, h, spec.kernel)) * np.asarray(
        kernel_weight(d2, h, spec.kernel)
    )
    y_t = np.broadcast_to(y, (G, n)).copy()
    X = np.stack([np.ones((G, n)), d1, d2], axis=2)

    starts = lp_minimize_batch(y_t, X, w, 2.0, np.zeros((G, 3)))["beta"]
    out = _run_batch(y_t, X, w, spec, starts)

    interior = (
        (grid[:, 0] > np.min(x1) + h)
        & (grid[:, 0] < np.max(x1) - h)
        & (grid[:, 1] > np.min(x2) + h)
        & (grid[:, 1] < np.max(x2) - h)
    )
    diag = FitDiagnostics(
        objective=out["objective"],
        iterations=out["iterations"],
        converged=out["converged"],
        clamped=out["clamped"],
        degenerate=out["degenerate"],
    )
    return FitResult(grid=grid, m_hat=out["beta"][:, 0], m1_hat=None,
                     interior_mask=interior, diagnostics=diag)


@dataclass(frozen=True)
class AsymptoticMoments:
    """Leading bias and variance of the estimator at one point."""

    bias: float
    variance: float
    x: float
    exponent: float
    n: int
    h: float
    degree: str
    target: str


def asymptotic_moments(
    x: float,
    *,
    exponent: float,
    f: float,
    f1: float = 0.0,
    m1: float = 0.0,
    m2: float = 0.0,
    m3: float = 0.0,
    abs_moment_pm2: float,
    abs_moment_2pm2: float,
    constants: KernelConstants,
    n: int,
    h: float,
    degree: str = DEGREE_LINEAR,
    target: str = "estimate",
) -> AsymptoticMoments:
    """Leading-order bias and variance of the local Lp estimator at x.

    ``m1, m2, m3`` are the true derivatives of the regression function at
    x, ``f, f1`` the design density and its derivative, and the moment
    arguments are E|e|^(p-2) and E|e|^(2p-2) of the error distribution.
    Valid for exponent > 1; the derivative target requires degree 'linear'.
    """
    p = exponent
    if p <= 1.0:
        raise ValueError("asymptotic moments require exponent > 1")
    if degree not in (DEGREE_CONSTANT, DEGREE_LINEAR):
        raise ValueError(f"degree must be 'constant' or 'linear', got {degree!r}")
    if target not in ("estimate", "derivative"):
        raise ValueError(f"target must be 'estimate' or 'derivative', got {target!r}")
    if target == "derivative" and degree != DEGREE_LINEAR:
        raise ValueError("derivative target requires degree 'linear'")
    if f <= 0 or h <= 0 or n < 1:
        raise ValueError("need f > 0, h > 0 and n >= 1")

    k = constants
    denom = (p - 1.0) ** 2 * abs_moment_pm2**2
    if target == "estimate":
        if degree == DEGREE_CONSTANT:
            bias = k.mu2 * h**2 * (m1 * f1 / f + m2 / 2.0)
        else:
            bias = k.mu2 * h**2 * m2 / 2.0
        variance = k.r_k * abs_moment_2pm2 / (n * h * denom * f)
    else:
        bias = k.mu4 * h**2 * m3 / (6.0 * k.mu2)
        variance = k.mu2_ksq**2 * abs_moment_2pm2 / (n * h**3 * f * k.mu2 * denom)
    return AsymptoticMoments(
        bias=float(bias), variance=float(variance), x=float(x),
        exponent=float(p), n=int(n), h=float(h), degree=degree, target=target,
    )

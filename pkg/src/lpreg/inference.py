"""Pointwise bootstrap confidence bands for local Lp fits.

The bands are basic (reflected) bootstrap intervals

    ( 2 m_hat(x) - Q_{1-alpha}(x),  2 m_hat(x) - Q_alpha(x) )

where the quantiles come from refits on resampled responses
``y* = m_hat(x_i) + e*``.  The resampled residuals are taken against a
bias-reduced pilot estimate: local fits are computed over a log-spaced
range of bandwidths (h/2, 2h) and, per data point, regressed on h^2; the
intercept removes the leading O(h^2) smoothing bias, so the residuals
are not systematically shrunk toward the fitted curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import kernel_weight
from .localreg import (
    DEGREE_CONSTANT,
    Dataset1D,
    FitSpec,
    default_grid,
    fit_local_1d,
)
from .lpsolve import DegenerateProblemError, lp_minimize_batch

# Largest tolerated fraction of dropped bootstrap replicates.
_MAX_DROP_FRACTION = 0.05

# Rows per vectorized bootstrap chunk, to bound peak memory.
_CHUNK_ROWS = 6000


@dataclass(frozen=True)
class BandSpec:
    """Band level (1 - 2*alpha), replicate count and rng seed."""

    alpha: float = 0.025
    replicates: int = 500
    bandwidth_grid_size: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must be in (0, 0.5), got {self.alpha!r}")
        if self.replicates < 100:
            raise ValueError(f"need at least 100 replicates, got {self.replicates}")
        if self.bandwidth_grid_size < 4:
            raise ValueError("bandwidth grid needs at least 4 points")


@dataclass(frozen=True)
class BandResult:
    """Point estimates with lower/upper limits, pilot values and residuals."""

    grid: np.ndarray
    m_hat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    pilot: np.ndarray
    residuals_used: np.ndarray
    dropped: int


def bias_reduced_pilot(data: Dataset1D, spec: FitSpec,
                       bandwidth_grid_size: int = 10) -> np.ndarray:
    """Bias-reduced estimates of the regression function at the data points.

    Fits with ``bandwidth_grid_size`` bandwidths log-spaced over
    (h/2, 2h) and returns, per data point, the intercept of the LS
    regression of the estimates on h^2.  Bandwidths whose fit degenerates
    anywhere are dropped; fewer than 4 survivors is an error.
    """
    x = data.x
    order = np.argsort(x, kind="stable")
    inverse = np.empty_like(order)
    inverse[order] = np.arange(x.size)

    hs = np.geomspace(spec.bandwidth / 2.0, 2.0 * spec.bandwidth, bandwidth_grid_size)
    curves, kept = [], []
    for h in hs:
        f = fit_local_1d(data, FitSpec(degree=spec.degree, exponent=spec.exponent,
                                       bandwidth=float(h), kernel=spec.kernel,
                                       grid=x[order]))
        if np.any(f.diagnostics.degenerate):
            continue
        curves.append(f.m_hat[inverse])
        kept.append(h * h)
    if len(kept) < 4:
        raise DegenerateProblemError(
            f"only {len(kept)} usable pilot bandwidths out of {bandwidth_grid_size}"
        )
    M = np.vstack(curves)            # (n_h, n)
    z = np.asarray(kept)
    zc = z - z.mean()
    slope = zc @ (M - M.mean(axis=0)) / (zc @ zc)
    return M.mean(axis=0) - slope * z.mean()


def _order_stat_quantiles(samples: np.ndarray, alpha: float):
    """Lower/upper empirical quantiles by the ceil(B*q) order statistic."""
    b = samples.shape[0]
    s = np.sort(samples, axis=0)
    lo = min(max(int(np.ceil(b * alpha)), 1), b) - 1
    hi = min(max(int(np.ceil(b * (1.0 - alpha))), 1), b) - 1
    return s[lo], s[hi]


def bootstrap_bands(data: Dataset1D, spec: FitSpec, band: BandSpec) -> BandResult:
    """Basic 1 - 2*alpha pointwise bootstrap band on the spec's grid.

    All refits reuse the spec's (p, h); re-estimating the tuning
    parameters per replicate would change the estimand of the band.
    Deterministic for a fixed ``band.seed``.
    """
    x, y = data.x, data.y
    grid = spec.grid if spec.grid is not None else default_grid(x)
    n = x.size

    pilot = bias_reduced_pilot(data, spec, band.bandwidth_grid_size)

    pts = np.concatenate([grid, x])
    order = np.argsort(pts, kind="stable")
    inverse = np.empty_like(order)
    inverse[order] = np.arange(pts.size)
    base = fit_local_1d(data, FitSpec(degree=spec.degree, exponent=spec.exponent,
                                      bandwidth=spec.bandwidth, kernel=spec.kernel,
                                      grid=pts[order]))
    m_all = base.m_hat[inverse]
    m_grid, m_x = m_all[: grid.size], m_all[grid.size:]

    resid = y - pilot
    resid = resid - resid.mean()

    # Shared design and weights for every replicate: only y* changes.
    # Each grid point's problem is trimmed to its nonzero-weight window
    # (the floored Gaussian weights have bounded support), zero-padded to
    # a common width so the refits stack into one batch.
    G = grid.size
    d_full = x[None, :] - grid[:, None]
    w_full = np.asarray(kernel_weight(d_full, spec.bandwidth, spec.kernel))
    width = max(int(np.max((w_full > 0).sum(axis=1))), 2)
    idx = np.argsort(w_full <= 0, axis=1, kind="stable")[:, :width]   # (G, width)
    rows = np.arange(G)[:, None]
    w = np.where(w_full[rows, idx] > 0, w_full[rows, idx], 0.0)
    d = d_full[rows, idx]
    if spec.degree == DEGREE_CONSTANT:
        X = np.ones((G, width, 1))
        dcols = 1
    else:
        X = np.stack([np.ones((G, width)), d], axis=2)
        dcols = 2
    X = np.where(w[:, :, None] > 0, X, 0.0)

    # Per-point weighted-LS operator for the p=2 starting values.
    Xw = X * w[:, :, None]
    A = np.matmul(Xw.transpose(0, 2, 1), X)
    ok = np.linalg.det(A) > 0
    L = np.zeros((G, dcols, width))
    if np.any(ok):
        L[ok] = np.linalg.solve(A[ok], Xw[ok].transpose(0, 2, 1))

    B = band.replicates
    rng = np.random.default_rng(band.seed)
    draws = rng.integers(0, n, size=(B, n))

    boot = np.empty((B, G))
    per_chunk = max(1, _CHUNK_ROWS // G)
    for start in range(0, B, per_chunk):
        stop = min(start + per_chunk, B)
        k = stop - start
        ystar = m_x[None, :] + resid[draws[start:stop]]          # (k, n)
        y_t = ystar[:, idx].reshape(k * G, width)
        starts = np.einsum("gdn,rgn->rgd", L,
                           ystar[:, idx]).reshape(k * G, dcols)
        if spec.exponent != 2.0:
            X_t = np.tile(X, (k, 1, 1))
            w_t = np.tile(w, (k, 1))
            out = lp_minimize_batch(y_t, X_t, w_t, spec.exponent, starts)
            curves = out["beta"][:, 0]
        else:
            curves = starts[:, 0]
        boot[start:stop] = curves.reshape(k, G)

    good = np.all(np.isfinite(boot), axis=1)
    dropped = int(B - good.sum())
    if dropped > _MAX_DROP_FRACTION * B:
        raise DegenerateProblemError(
            f"{dropped} of {B} bootstrap replicates failed"
        )
    q_lo, q_hi = _order_stat_quantiles(boot[good], band.alpha)

    return BandResult(
        grid=grid,
        m_hat=m_grid,
        lower=2.0 * m_grid - q_hi,
        upper=2.0 * m_grid - q_lo,
        pilot=pilot,
        residuals_used=resid,
        dropped=dropped,
    )

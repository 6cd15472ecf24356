"""Data-driven selection of the norm exponent p and the bandwidth.

Two residual-based estimators of the shape parameter:

* Q method: score each candidate p by how far the sorted residuals are
  from the span of the matching GED quantiles (no-intercept quantile
  regression); pick the candidate with the smallest orthogonal residual.
* K method: moment formula ``p = 9 / kurtosis^2 + 1``.  Simple, but
  biased low for light-tailed data because the sample kurtosis plateaus
  near 2.

Bandwidths: ``select_h2`` produces a pilot least-squares bandwidth (a
quartic-fit plug-in with an optional leave-one-out CV mode), and
``convert_bandwidth`` rescales it to the Lp-optimal bandwidth through the
fifth-root moment ratio; ``convert_bandwidth_ged`` is the closed form of
that ratio under GED errors.

``auto_fit`` chains the full pipeline: pilot bandwidth, p = 2 fit,
Q-method estimate of p from its residuals, bandwidth conversion, final
Lp fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .ged import GedParams, ged_quantile
from .kernels import GAUSSIAN, Kernel, kernel_constants, kernel_weight
from .localreg import (
    DEGREE_LINEAR,
    Dataset1D,
    FitResult,
    FitSpec,
    default_grid,
    fit_local_1d,
)
from .lpsolve import DegenerateProblemError

CV_GRID_SIZE = 30


@dataclass(frozen=True)
class PGrid:
    """Sorted candidate exponents in [1, 20]."""

    candidates: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.candidates, float)
        object.__setattr__(self, "candidates", c)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("candidate grid must be a nonempty 1-d array")
        if np.any(np.diff(c) <= 0):
            raise ValueError("candidate grid must be strictly increasing")
        if c[0] < 1.0 or c[-1] > 20.0:
            raise ValueError("candidates must lie within [1, 20]")

    @classmethod
    def default(cls, lo: float = 1.0, hi: float = 20.0, step: float = 0.25) -> "PGrid":
        n = int(round((hi - lo) / step))
        return cls(lo + step * np.arange(n + 1))


@dataclass(frozen=True)
class QEstimate:
    """Q-method output: the chosen exponent plus per-candidate scores."""

    p_hat: float
    candidates: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True)
class BandwidthResult:
    """Pilot bandwidth, converted Lp bandwidth and the moments used."""

    h2: float
    hp: float
    p_used: float
    moment_2pm2: float
    moment_pm2: float
    moment_2: float


_quantile_cache: dict = {}


def _candidate_quantiles(n: int, grid: PGrid) -> np.ndarray:
    """GED quantiles at plotting positions (i - 0.5)/n, one row per candidate."""
    key = (n, grid.candidates.tobytes())
    q = _quantile_cache.get(key)
    if q is None:
        u = (np.arange(1, n + 1) - 0.5) / n
        q = np.vstack(
            [ged_quantile(u, GedParams(0.0, 1.0, p)) for p in grid.candidates]
        )
        if len(_quantile_cache) > 32:
            _quantile_cache.clear()
        _quantile_cache[key] = q
    return q


def estimate_p_Q(residuals, grid: Optional[PGrid] = None) -> QEstimate:
    """Estimate the shape parameter by quantile matching.

    Residuals are centered at their median, sorted, and each candidate p
    is scored by the norm of the component of the sorted residuals
    orthogonal to the candidate's GED quantiles; the smallest score wins,
    ties going to the smaller p.
    """
    r = np.asarray(residuals, float)
    if r.ndim != 1 or r.size < 10:
        raise ValueError("need at least 10 residuals")
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals must be finite")
    if np.ptp(r) == 0.0:
        raise DegenerateProblemError("residuals are all identical; no quantile spread")
    if grid is None:
        grid = PGrid.default()

    yq = np.sort(r - np.median(r))
    q = _candidate_quantiles(r.size, grid)
    proj = (q @ yq) / np.sum(q * q, axis=1)
    scores = np.linalg.norm(yq[None, :] - proj[:, None] * q, axis=1)
    i = int(np.argmin(scores))
    return QEstimate(p_hat=float(grid.candidates[i]), candidates=grid.candidates,
                     scores=scores)


def estimate_p_K(residuals) -> float:
    """Kurtosis-based estimate 9/kappa^2 + 1, floored at 1."""
    r = np.asarray(residuals, float)
    if r.ndim != 1 or r.size < 4:
        raise ValueError("need at least 4 residuals")
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals must be finite")
    c = r - r.mean()
    m2 = np.mean(c**2)
    if m2 == 0.0:
        raise DegenerateProblemError("residuals have zero variance")
    kappa = np.mean(c**4) / m2**2
    return float(max(1.0, 9.0 / kappa**2 + 1.0))


def _quartic_plugin(x: np.ndarray, y: np.ndarray, kernel: Kernel):
    """Plug-in pilot bandwidth; returns None if the quartic fit is rank deficient."""
    n = x.size
    s = float(np.std(x))
    u = (x - x.mean()) / s
    U = np.vander(u, 5, increasing=True)
    coef, rss, rank, _ = np.linalg.lstsq(U, y, rcond=None)
    if rank < 5:
        return None
    resid = y - U @ coef
    sigma2 = float(resid @ resid) / (n - 5)
    m2 = (2.0 * coef[2] + 6.0 * coef[3] * u + 12.0 * coef[4] * u * u) / (s * s)
    theta22 = float(np.mean(m2 * m2))
    span = float(np.ptp(x))
    k = kernel_constants(kernel)
    cap = span / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        h5 = k.r_k * sigma2 * span / (n * k.mu2**2 * theta22)
    if not np.isfinite(h5) or h5 <= 0.0:
        return cap
    return min(h5 ** 0.2, cap)


def _loocv_bandwidth(x: np.ndarray, y: np.ndarray, kernel: Kernel) -> float:
    """Leave-one-out CV for the local linear p=2 fit over a log bandwidth grid."""
    n = x.size
    span = float(np.ptp(x))
    hs = np.geomspace(span / n, span / 2.0, CV_GRID_SIZE)
    best_h, best_cv = span / 2.0, np.inf
    d = x[None, :] - x[:, None]
    for h in hs:
        w = np.asarray(kernel_weight(d, h, kernel))
        s0 = w.sum(axis=1)
        s1 = (w * d).sum(axis=1)
        s2 = (w * d * d).sum(axis=1)
        denom = s0 * s2 - s1 * s1
        if np.any(denom <= 0):
            continue
        l = w * (s2[:, None] - d * s1[:, None]) / denom[:, None]
        one_minus = 1.0 - np.diagonal(l)
        if np.any(one_minus <= 1e-10):
            continue
        cv = float(np.mean(((y - l @ y) / one_minus) ** 2))
        if cv < best_cv:
            best_cv, best_h = cv, float(h)
    return best_h


def select_h2(data: Dataset1D, mode: str = "plugin", kernel: Kernel = GAUSSIAN) -> float:
    """Pilot bandwidth for the p=2 local linear fit.

    "plugin" estimates curvature and noise from a global quartic fit and
    plugs them into the AMISE formula, capped at half the design range;
    "cv" minimizes leave-one-out CV over a log grid.  A rank-deficient
    quartic fit falls back to CV.
    """
    if mode not in ("plugin", "cv"):
        raise ValueError(f"mode must be 'plugin' or 'cv', got {mode!r}")
    x, y = data.x, data.y
    if x.size < 10:
        raise ValueError("need at least 10 observations to select a bandwidth")
    if mode == "plugin":
        h = _quartic_plugin(x, y, kernel)
        if h is not None:
            return h
    return _loocv_bandwidth(x, y, kernel)


def convert_bandwidth(residuals, h2: float, p: float) -> BandwidthResult:
    """Rescale the pilot bandwidth to the Lp-optimal one via sample moments.

    hp^5 = mean|r|^(2p-2) / ((p-1)^2 mean|r|^(p-2)^2 mean r^2) * h2^5,
    with |r| clamped below at 1e-8 of the residual RMS before the (p-2)
    power when p < 2.
    """
    r = np.asarray(residuals, float)
    if r.ndim != 1 or r.size < 1 or not np.all(np.isfinite(r)):
        raise ValueError("residuals must be a finite 1-d array")
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"bandwidth conversion requires p > 1, got {p!r}")
    if h2 <= 0.0:
        raise ValueError(f"h2 must be positive, got {h2!r}")
    a = np.abs(r)
    m2 = float(np.mean(a**2))
    if m2 == 0.0:
        raise DegenerateProblemError("residuals are identically zero")
    ac = np.maximum(a, 1e-8 * np.sqrt(m2)) if p < 2.0 else a
    m2pm2 = float(np.mean(a ** (2.0 * p - 2.0)))
    mpm2 = float(np.mean(ac ** (p - 2.0)))
    ratio = m2pm2 / ((p - 1.0) ** 2 * mpm2**2 * m2)
    return BandwidthResult(
        h2=float(h2), hp=float(ratio**0.2 * h2), p_used=float(p),
        moment_2pm2=m2pm2, moment_pm2=mpm2, moment_2=m2,
    )


def convert_bandwidth_ged(p: float, h2: float) -> float:
    """Closed-form hp under GED errors:

    hp^5 = Gamma(1/p)^2 Gamma((2p-1)/p) /
           (Gamma((p-1)/p)^2 Gamma(3/p) (p-1)^2) * h2^5.
    """
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"bandwidth conversion requires p > 1, got {p!r}")
    if h2 <= 0.0:
        raise ValueError(f"h2 must be positive, got {h2!r}")
    if p == 2.0:
        return float(h2)
    log_ratio = (
        2.0 * special.gammaln(1.0 / p)
        + special.gammaln((2.0 * p - 1.0) / p)
        - 2.0 * special.gammaln((p - 1.0) / p)
        - special.gammaln(3.0 / p)
        - 2.0 * np.log(p - 1.0)
    )
    return float(np.exp(log_ratio / 5.0) * h2)


@dataclass(frozen=True)
class PipelineFit:
    """Everything produced by the three-step fitting pipeline."""

    result: FitResult
    pilot_grid: FitResult
    pilot_at_x: np.ndarray
    residuals: np.ndarray
    p_hat: float
    q_scores: Optional[QEstimate]
    bandwidth: BandwidthResult


def auto_fit(
    data: Dataset1D,
    *,
    degree: str = DEGREE_LINEAR,
    kernel: Kernel = GAUSSIAN,
    grid: Optional[np.ndarray] = None,
    grid_size: int = 101,
    p: Optional[float] = None,
    h2: Optional[float] = None,
    hp: Optional[float] = None,
    h2_mode: str = "plugin",
    p_grid: Optional[PGrid] = None,
    interior_only_residuals: bool = False,
) -> PipelineFit:
    """Pilot bandwidth, p=2 fit, Q-method p, bandwidth conversion, Lp fit.

    Explicit ``p``, ``h2`` or ``hp`` values override the corresponding
    pipeline step.  When the selected p is exactly 1 the conversion ratio
    diverges; the bandwidth is then capped at half the design range.
    """
    x, y = data.x, data.y
    if grid is None:
        grid = default_grid(x, grid_size)
    grid = np.asarray(grid, float)

    h2_val = float(h2) if h2 is not None else select_h2(data, h2_mode, kernel)

    # One p=2 fit over grid and design points together.
    pts = np.concatenate([grid, x])
    order = np.argsort(pts, kind="stable")
    inverse = np.empty_like(order)
    inverse[order] = np.arange(pts.size)
    pilot_spec = FitSpec(degree=degree, exponent=2.0, bandwidth=h2_val,
                         kernel=kernel, grid=pts[order])
    pilot_all = fit_local_1d(data, pilot_spec)
    m_all = pilot_all.m_hat[inverse]
    m1_all = pilot_all.m1_hat[inverse] if pilot_all.m1_hat is not None else None
    int_all = pilot_all.interior_mask[inverse]
    diag = pilot_all.diagnostics
    take = lambda a, sl: a[inverse[sl]]  # noqa: E731

    gsl = slice(0, grid.size)
    xsl = slice(grid.size, pts.size)
    pilot_grid = FitResult(
        grid=grid, m_hat=m_all[gsl],
        m1_hat=m1_all[gsl] if m1_all is not None else None,
        interior_mask=int_all[gsl],
        diagnostics=type(diag)(*(take(getattr(diag, f), gsl)
                                 for f in ("objective", "iterations", "converged",
                                           "clamped", "degenerate"))),
    )
    pilot_at_x = m_all[xsl]
    residuals = y - pilot_at_x

    res_for_p = residuals[int_all[xsl]] if interior_only_residuals else residuals
    if res_for_p.size < 10:
        res_for_p = residuals

    q_scores = None
    if p is not None:
        p_hat = float(p)
    else:
        q_scores = estimate_p_Q(res_for_p, p_grid)
        p_hat = q_scores.p_hat

    cap = float(np.ptp(x)) / 2.0
    if hp is not None:
        bw = BandwidthResult(h2=h2_val, hp=float(hp), p_used=p_hat,
                             moment_2pm2=np.nan, moment_pm2=np.nan, moment_2=np.nan)
    elif p_hat <= 1.0:
        bw = BandwidthResult(h2=h2_val, hp=cap, p_used=p_hat,
                             moment_2pm2=np.nan, moment_pm2=np.nan, moment_2=np.nan)
    else:
        bw = convert_bandwidth(res_for_p, h2_val, p_hat)
        if bw.hp > cap:
            bw = BandwidthResult(h2=bw.h2, hp=cap, p_used=bw.p_used,
                                 moment_2pm2=bw.moment_2pm2,
                                 moment_pm2=bw.moment_pm2, moment_2=bw.moment_2)

    final_spec = FitSpec(degree=degree, exponent=p_hat, bandwidth=bw.hp,
                         kernel=kernel, grid=grid)
    result = fit_local_1d(data, final_spec)
    return PipelineFit(result=result, pilot_grid=pilot_grid, pilot_at_x=pilot_at_x,
                       residuals=residuals, p_hat=p_hat, q_scores=q_scores,
                       bandwidth=bw)

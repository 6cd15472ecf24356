"""Weighted Lp-norm minimization.

Minimizes ``sum_i w_i |y_i - X_i beta|^p`` over ``beta`` for ``p >= 1`` by
damped iteratively reweighted least squares: each step solves a weighted
least-squares problem with per-point weight ``w_i |r_i|^(p-2)``, residuals
clamped below to control the p < 2 singularity and the p > 2 zero-weight
collapse.  For ``p > 2`` the natural step is scaled by ``1/(p-1)``, which
makes the update an exact Newton step on the smooth objective; any step
that would increase the objective is halved toward the previous iterate.

``lp_minimize`` solves one problem; ``lp_minimize_batch`` solves a stack
of problems of identical shape in vectorized form, which is what the
local-regression drivers use (one problem per evaluation point).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

# Relative determinant threshold below which a weighted design is treated
# as rank deficient.
_DET_RTOL = 1e-12

_MAX_HALVINGS = 30

FLAG_OK = "ok"
FLAG_CLAMPED = "clamped_residuals"
FLAG_DEGENERATE = "degenerate"


class DegenerateProblemError(ValueError):
    """Raised when data admit no usable fit (rank-deficient, zero spread...)."""


@dataclass(frozen=True)
class LpProblem:
    """A weighted Lp regression problem ``min_beta sum w |y - X beta|^p``."""

    responses: np.ndarray
    design: np.ndarray
    weights: np.ndarray
    exponent: float
    start: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.responses, float)
        x = np.asarray(self.design, float)
        w = np.asarray(self.weights, float)
        b = np.asarray(self.start, float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "design", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "start", b)
        n, d = x.shape
        if d not in (1, 2, 3):
            raise ValueError(f"design must have 1-3 columns, got {d}")
        if y.shape != (n,) or w.shape != (n,):
            raise ValueError("responses, weights and design rows must have equal length")
        if n < d:
            raise ValueError(f"need at least {d} observations, got {n}")
        if b.shape != (d,):
            raise ValueError(f"start must have length {d}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x)) and np.all(np.isfinite(b))):
            raise ValueError("responses, design and start must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if not np.isfinite(self.exponent) or self.exponent < 1.0:
            raise ValueError(
                f"exponent must satisfy p >= 1 (p < 1 is non-convex), got {self.exponent!r}"
            )


@dataclass(frozen=True)
class LpSolution:
    """Minimizer plus solver diagnostics for one Lp problem."""

    coefficients: np.ndarray
    objective: float
    iterations: int
    converged: bool
    condition_flag: str


def _objective(w: np.ndarray, r: np.ndarray, p: float) -> np.ndarray:
    return np.sum(w * np.abs(r) ** p, axis=-1)


def _wls_solve(X: np.ndarray, omega: np.ndarray, y: np.ndarray):
    """Batched weighted LS solve.

    X: (G, n, d), omega: (G, n), y: (G, n).  Returns (beta, singular_mask);
    rows flagged singular get the minimum-norm lstsq solution instead.
    """
    Xo = X * omega[:, :, None]
    A = np.matmul(Xo.transpose(0, 2, 1), X)
    b = np.matmul(Xo.transpose(0, 2, 1), y[:, :, None])[:, :, 0]
    diag = np.diagonal(A, axis1=1, axis2=2)
    hadamard = np.prod(diag, axis=1)
    det = np.linalg.det(A)
    good = (hadamard > 0) & (det > _DET_RTOL * hadamard)
    beta = np.zeros_like(b)
    if np.any(good):
        beta[good] = np.linalg.solve(A[good], b[good][:, :, None])[:, :, 0]
    if not np.all(good):
        for g in np.flatnonzero(~good):
            sw = np.sqrt(omega[g])
            beta[g] = np.linalg.lstsq(X[g] * sw[:, None], y[g] * sw, rcond=None)[0]
    return beta, ~good


def lp_minimize_batch(
    y: np.ndarray,
    X: np.ndarray,
    w: np.ndarray,
    p: float,
    start: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> dict:
    """Solve G same-shape weighted Lp problems at once.

    y, w: (G, n); X: (G, n, d); start: (G, d).  Returns a dict of arrays
    keyed ``beta, objective, iterations, converged, clamped, degenerate``.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")
    y = np.ascontiguousarray(y, float)
    w = np.ascontiguousarray(w, float)
    X = np.ascontiguousarray(X, float)
    start = np.ascontiguousarray(start, float)
    G, n, d = X.shape

    degenerate = np.sum(w > 0, axis=1) < d
    clamped = np.zeros(G, dtype=bool)
    iterations = np.zeros(G, dtype=int)
    converged = np.zeros(G, dtype=bool)

    if p == 2.0:
        beta, sing = _wls_solve(X, w, y)
        degenerate |= sing
        r = y - np.matmul(X, beta[:, :, None])[:, :, 0]
        obj = _objective(w, r, p)
        iterations[:] = 1
        converged[:] = ~degenerate
        return {
            "beta": beta,
            "objective": obj,
            "iterations": iterations,
            "converged": converged,
            "clamped": clamped,
            "degenerate": degenerate,
        }

    delta = 1e-8 * (1.0 + np.median(np.abs(y), axis=1))
    beta = start.copy()
    for g in np.flatnonzero(degenerate):
        sw = np.sqrt(w[g])
        beta[g] = np.linalg.lstsq(X[g] * sw[:, None], y[g] * sw, rcond=None)[0]
    r = y - np.matmul(X, beta[:, :, None])[:, :, 0]
    obj = _objective(w, r, p)
    lam0 = 1.0 if p <= 2.0 else 1.0 / (p - 1.0)

    active = ~degenerate
    while np.any(active):
        idx = np.flatnonzero(active)
        Xa, ya, wa = X[idx], y[idx], w[idx]
        ra, ba, da = r[idx], beta[idx], delta[idx]
        obj_a = obj[idx]

        abs_r = np.abs(ra)
        clamped[idx] |= np.any((abs_r < da[:, None]) & (wa > 0), axis=1)
        rc = np.maximum(abs_r, da[:, None])
        omega = np.where(wa > 0, wa * rc ** (p - 2.0), 0.0)

        beta_wls, sing = _wls_solve(Xa, omega, ya)
        if np.any(sing):
            # Weighted design collapsed under Lp reweighting: freeze those rows.
            bad = idx[sing]
            degenerate[bad] = True
            active[bad] = False
            keep = ~sing
            if not np.any(keep):
                continue
            idx = idx[keep]
            Xa, ya, wa = Xa[keep], ya[keep], wa[keep]
            ra, ba, obj_a = ra[keep], ba[keep], obj_a[keep]
            beta_wls = beta_wls[keep]

        step = beta_wls - ba
        lam = np.full(len(idx), lam0)
        cand = ba + lam[:, None] * step
        r_cand = ya - np.matmul(Xa, cand[:, :, None])[:, :, 0]
        obj_cand = _objective(wa, r_cand, p)
        for _ in range(_MAX_HALVINGS):
            worse = obj_cand > obj_a
            if not np.any(worse):
                break
            lam[worse] *= 0.5
            cand[worse] = ba[worse] + lam[worse, None] * step[worse]
            r_cand[worse] = ya[worse] - np.matmul(Xa[worse], cand[worse][:, :, None])[:, :, 0]
            obj_cand[worse] = _objective(wa[worse], r_cand[worse], p)

        stalled = obj_cand > obj_a
        accept = ~stalled
        rows = idx[accept]
        beta[rows] = cand[accept]
        r[rows] = r_cand[accept]
        obj[rows] = obj_cand[accept]
        iterations[idx] += 1

        done = stalled | (np.abs(obj_a - obj_cand) <= tol * (1.0 + np.abs(obj_cand)))
        converged[idx[done]] = True
        active[idx[done]] = False
        active[idx[iterations[idx] >= max_iter]] = False

    return {
        "beta": beta,
        "objective": obj,
        "iterations": iterations,
        "converged": converged,
        "clamped": clamped,
        "degenerate": degenerate,
    }


def lp_minimize(
    problem: LpProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LpSolution:
    """Minimize one weighted Lp problem; see :class:`LpSolution` for diagnostics.

    For p = 1 the minimizer may be non-unique; any minimizer is returned.
    Degenerate designs yield the minimum-norm weighted-LS coefficients and
    the ``degenerate`` flag rather than an exception.
    """
    out = lp_minimize_batch(
        problem.responses[None, :],
        problem.design[None, :, :],
        problem.weights[None, :],
        problem.exponent,
        problem.start[None, :],
        tol=tol,
        max_iter=max_iter,
    )
    if out["degenerate"][0]:
        flag = FLAG_DEGENERATE
    elif out["clamped"][0]:
        flag = FLAG_CLAMPED
    else:
        flag = FLAG_OK
    return LpSolution(
        coefficients=out["beta"][0],
        objective=float(out["objective"][0]),
        iterations=int(out["iterations"][0]),
        converged=bool(out["converged"][0]),
        condition_flag=flag,
    )

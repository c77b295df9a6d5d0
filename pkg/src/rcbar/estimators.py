"""Weighted least-squares estimators on a simulated tree.

Estimates at generation ``n`` regress children on the parents in generations
``0..n-1``. Mean parameters use weights ``1 / c_k`` with ``c_k = 1 + X_k^2``;
variance and covariance parameters use ``1 / d_k`` with ``d_k = c_k^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simulate import TreeData

# 2x2 Gram matrices above this condition number get the identity added once
SINGULAR_COND = 1e12


def csum(values) -> float:
    """Exactly rounded sum, independent of summation order."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


@dataclass(frozen=True)
class RegressorWeights:
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def of(cls, x: np.ndarray) -> "RegressorWeights":
        c = 1.0 + x * x
        return cls(c, c * c)


@dataclass(frozen=True)
class Gram:
    """A 2x2 weighted Gram matrix, possibly shifted by the identity."""
    matrix: np.ndarray
    regularized: bool = False


@dataclass(frozen=True)
class DesignMatrices:
    S: Gram
    Q: Gram | None = None

    @property
    def regularized(self) -> bool:
        return self.S.regularized or (self.Q is not None and self.Q.regularized)


@dataclass(frozen=True)
class EstimateSet:
    theta_hat: np.ndarray  # (a, c, b, d)
    eta_hat: np.ndarray    # (sigma_a^2, sigma_c^2)
    zeta_hat: np.ndarray   # (sigma_b^2, sigma_d^2)
    nu_hat: np.ndarray     # (rho_ab, rho_cd)
    design: DesignMatrices
    n: int

    def row(self) -> list:
        return [self.n, *self.theta_hat, *self.eta_hat, *self.zeta_hat, *self.nu_hat,
                self.design.regularized]


def cond2(m: np.ndarray) -> float:
    """Condition number of a symmetric 2x2 matrix from its closed-form eigenvalues."""
    p, q, r = float(m[0, 0]), float(m[0, 1]), float(m[1, 1])
    half_tr = 0.5 * (p + r)
    disc = math.hypot(0.5 * (p - r), q)
    lo, hi = half_tr - disc, half_tr + disc
    if lo <= 0:
        return math.inf
    return hi / lo


def gram(u: np.ndarray, w: np.ndarray) -> Gram:
    """``sum w_k (u_k, 1)(u_k, 1)^t`` with the singularity rule applied."""
    s00, s01, s11 = csum(w * u * u), csum(w * u), csum(w)
    m = np.array([[s00, s01], [s01, s11]])
    if cond2(m) > SINGULAR_COND:
        return Gram(m + np.eye(2), True)
    return Gram(m, False)


def solve2(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Adjugate solve of a 2x2 system."""
    p, q, r, s = float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1])
    det = math.fsum([p * s, -q * r])
    y0, y1 = float(rhs[0]), float(rhs[1])
    return np.array([math.fsum([s * y0, -q * y1]) / det, math.fsum([p * y1, -r * y0]) / det])


def _check_n(t: TreeData, n: int):
    if n < 1:
        raise ValueError("estimation needs n >= 1")
    if n > t.n:
        raise ValueError(f"tree only covers generations 0..{t.n}, requested n={n}")


def wls_theta(t: TreeData, n: int):
    """Mean parameters ``(a, c, b, d)`` and the Gram matrix ``S_{n-1}``."""
    _check_n(t, n)
    xk, x0, x1 = t.family(n)
    w = 1.0 / (1.0 + xk * xk)
    S = gram(xk, w)
    # the 4x4 system is I_2 kron S, so it splits into two 2x2 solves
    ac = solve2(S.matrix, [csum(w * xk * x0), csum(w * x0)])
    bd = solve2(S.matrix, [csum(w * xk * x1), csum(w * x1)])
    return np.array([ac[0], ac[1], bd[0], bd[1]]), DesignMatrices(S)


def residuals(t: TreeData, theta_hat, n: int | None = None):
    """``(V_hat_2k, V_hat_2k+1)`` over the parents in generations ``0..n-1``."""
    n = t.n if n is None else n
    _check_n(t, n)
    xk, x0, x1 = t.family(n)
    a, c, b, d = (float(v) for v in theta_hat)
    return x0 - a * xk - c, x1 - b * xk - d


def _q_gram(t: TreeData, n: int) -> tuple[Gram, np.ndarray, np.ndarray]:
    xk = t.family(n)[0]
    x2 = xk * xk
    w = 1.0 / (1.0 + x2) ** 2
    return gram(x2, w), x2, w


def _q_solve(Q: Gram, x2, w, response) -> np.ndarray:
    return solve2(Q.matrix, [csum(w * x2 * response), csum(w * response)])


def wls_variances(t: TreeData, resid, n: int):
    """``(eta_hat, zeta_hat, Q)`` regressing squared residuals on ``(X_k^2, 1)``."""
    _check_n(t, n)
    v0, v1 = resid
    Q, x2, w = _q_gram(t, n)
    return _q_solve(Q, x2, w, v0 * v0), _q_solve(Q, x2, w, v1 * v1), Q


def wls_covariance(t: TreeData, resid, n: int) -> np.ndarray:
    _check_n(t, n)
    v0, v1 = resid
    Q, x2, w = _q_gram(t, n)
    return _q_solve(Q, x2, w, v0 * v1)


def estimate(t: TreeData, n: int | None = None) -> EstimateSet:
    """All four estimators at generation ``n`` (default: the whole tree)."""
    n = t.n if n is None else n
    theta_hat, design = wls_theta(t, n)
    res = residuals(t, theta_hat, n)
    eta_hat, zeta_hat, Q = wls_variances(t, res, n)
    nu_hat = wls_covariance(t, res, n)
    return EstimateSet(theta_hat, eta_hat, zeta_hat, nu_hat,
                       DesignMatrices(design.S, Q), n)

"""Limit objects: moments of the tail variable T, limit matrices, bracket diagnostic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import csum
from .model import DerivedMoments
from .simulate import TreeData


@dataclass(frozen=True)
class TMoments:
    mean: float
    second_moment: float
    variance: float


def t_moments(m: DerivedMoments) -> TMoments:
    """Closed-form E[T], E[T^2] and Var(T)."""
    s2 = m.sigma2_a + m.sigma2_b + m.a**2 + m.b**2
    den2 = 2.0 - s2
    den1 = 2.0 - (m.a + m.b)
    if den2 <= 0:
        raise ValueError(
            f"2 - (sigma_a^2 + sigma_b^2 + a^2 + b^2) = {den2:.6g} <= 0: T has no finite second moment")
    if den1 <= 0:
        raise ValueError(f"2 - (a + b) = {den1:.6g} <= 0: T has no finite mean")
    c, d = m.c, m.d
    mean = (c + d) / den1
    second = ((m.sigma2_c + m.sigma2_d + c**2 + d**2) / den2
              + 2 * (m.a * c + m.b * d) * (c + d) / (den2 * den1))
    var = ((m.sigma2_c + m.sigma2_d) / den2
           + mean**2 * (m.sigma2_a + m.sigma2_b) / den2
           + 2.0 / den2 * (m.a * d - m.b * c + c - d) ** 2 / den1**2)
    return TMoments(mean, second, var)


def kron2(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def inv2(m: np.ndarray) -> np.ndarray:
    p, q, r, s = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    det = p * s - q * r
    return np.array([[s, -q], [-r, p]]) / det


def inv_identity_kron(S: np.ndarray) -> np.ndarray:
    """Inverse of ``I_2 kron S`` for a 2x2 ``S``."""
    return kron2(np.eye(2), inv2(S))


def _outer_t(t):
    """Stacked ``[[t^2, t], [t, 1]]``."""
    one = np.ones_like(t)
    return np.stack([np.stack([t * t, t], -1), np.stack([t, one], -1)], -2)


def _outer_t2(t):
    t2 = t * t
    return _outer_t(t2)


def _gamma(m: DerivedMoments, t):
    t2 = t * t
    P = m.sigma2_a * t2 + m.sigma2_c
    Q = m.rho_ab * t2 + m.rho_cd
    R = m.sigma2_b * t2 + m.sigma2_d
    return np.stack([np.stack([P, Q], -1), np.stack([Q, R], -1)], -2)


def _batched_kron(A, B):
    """Kronecker product of stacks of 2x2 matrices, shape (N, 4, 4)."""
    return np.einsum("nij,nkl->nikjl", A, B).reshape(A.shape[0], 4, 4)


_CHUNK = 1 << 17


def _mean_se(f, t: np.ndarray):
    """Sample mean and standard error of ``f(T)`` accumulated over fixed chunks.

    Values are shifted by ``f(T_1)`` before summing, which keeps the variance
    stable and makes constant samples return their value exactly.
    """
    shift = f(t[:1])[0]
    total = sq = None
    for start in range(0, t.size, _CHUNK):
        v = f(t[start : start + _CHUNK]) - shift
        if total is None:
            total, sq = v.sum(axis=0), (v * v).sum(axis=0)
        else:
            total += v.sum(axis=0)
            sq += (v * v).sum(axis=0)
    n = t.size
    centred = total / n
    mean = shift + centred
    var = np.maximum(sq - n * centred * centred, 0.0) / (n - 1)
    return mean, np.sqrt(var / n)


@dataclass(frozen=True)
class LimitMatrices:
    C: np.ndarray
    Lambda: np.ndarray
    L: np.ndarray
    D: np.ndarray
    M_ac: np.ndarray
    M_bd: np.ndarray
    H: np.ndarray
    cov_theta: np.ndarray
    cov_eta: np.ndarray
    cov_zeta: np.ndarray
    cov_nu: np.ndarray
    mc_samples: int
    mc_se: dict

    def qsl_target(self) -> float:
        """``tr(Lambda^{-1/2} L Lambda^{-1/2})``, which equals ``tr(Lambda^{-1} L)``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.trace(inv_identity_kron(self.C) @ self.L))

    def named(self) -> dict:
        return {"C": self.C, "Lambda": self.Lambda, "L": self.L, "D": self.D,
                "M_ac": self.M_ac, "M_bd": self.M_bd, "H": self.H,
                "cov_theta": self.cov_theta, "cov_eta": self.cov_eta,
                "cov_zeta": self.cov_zeta, "cov_nu": self.cov_nu}


class NotPositiveDefiniteError(ValueError):
    pass


def _require_pd(name: str, m: np.ndarray, rel_tol: float = 1e-12):
    """Cholesky check; pivots below ``rel_tol`` times the largest diagonal entry count as zero."""
    sym = 0.5 * (m + m.T)
    try:
        factor = np.linalg.cholesky(sym)
        ok = np.diag(factor).min() ** 2 > rel_tol * np.diag(sym).max()
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        raise NotPositiveDefiniteError(
            f"{name} is not positive definite; the T samples look degenerate or broken")


def limit_matrices(m: DerivedMoments, t_samples, check_pd: bool = True) -> LimitMatrices:
    """Monte Carlo averages over T of every matrix entering the limit theorems.

    Per-entry standard errors are reported for the seven expectation matrices.
    """
    t = np.asarray(t_samples, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two T samples")

    def c_term(t):
        return (1.0 / (1.0 + t * t))[:, None, None] * _outer_t(t)

    def l_term(t):
        w = 1.0 / (1.0 + t * t) ** 2
        return _batched_kron(_gamma(m, t), w[:, None, None] * _outer_t(t))

    def weighted_d(coef4, coef2, coef0):
        def f(t):
            t2 = t * t
            scale = (coef4 * t2 * t2 + coef2 * t2 + coef0) / (1.0 + t2) ** 4
            return scale[:, None, None] * _outer_t2(t)
        return f

    def d_term(t):
        return (1.0 / (1.0 + t * t) ** 2)[:, None, None] * _outer_t2(t)

    C, se_C = _mean_se(c_term, t)
    L, se_L = _mean_se(l_term, t)
    D, se_D = _mean_se(d_term, t)
    M_ac, se_ac = _mean_se(weighted_d(
        m.mu4_a - m.sigma2_a**2, 4 * m.sigma2_a * m.sigma2_c, m.mu4_c - m.sigma2_c**2), t)
    M_bd, se_bd = _mean_se(weighted_d(
        m.mu4_b - m.sigma2_b**2, 4 * m.sigma2_b * m.sigma2_d, m.mu4_d - m.sigma2_d**2), t)
    H, se_H = _mean_se(weighted_d(
        m.nu2_ab - m.rho_ab**2,
        m.sigma2_a * m.sigma2_d + m.sigma2_b * m.sigma2_c + 2 * m.rho_ab * m.rho_cd,
        m.nu2_cd - m.rho_cd**2), t)

    if check_pd:
        for name, mat in (("C", C), ("D", D), ("L", L)):
            _require_pd(name, mat)

    Lam = kron2(np.eye(2), C)
    # unchecked degenerate samples give singular C or D; their covariances come out inf/nan
    with np.errstate(divide="ignore", invalid="ignore"):
        Lam_inv = inv_identity_kron(C)
        D_inv = inv2(D)
        covs = (Lam_inv @ L @ Lam_inv, D_inv @ M_ac @ D_inv, D_inv @ M_bd @ D_inv,
                D_inv @ H @ D_inv)
    return LimitMatrices(
        C=C, Lambda=Lam, L=L, D=D, M_ac=M_ac, M_bd=M_bd, H=H,
        cov_theta=covs[0], cov_eta=covs[1], cov_zeta=covs[2], cov_nu=covs[3],
        mc_samples=int(t.size),
        mc_se={"C": se_C, "Lambda": kron2(np.eye(2), se_C), "L": se_L, "D": se_D,
               "M_ac": se_ac, "M_bd": se_bd, "H": se_H},
    )


def martingale_bracket(t: TreeData, m: DerivedMoments, n: int | None = None) -> np.ndarray:
    """Normalised increasing process ``<M>_n / |T_{n-1}|`` from observed X and true moments."""
    n = t.n if n is None else n
    xk = t.family(n)[0]
    w2 = 1.0 / (1.0 + xk * xk) ** 2
    terms = _batched_kron(_gamma(m, xk), w2[:, None, None] * _outer_t(xk))
    out = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            out[i, j] = out[j, i] = csum(terms[:, i, j])
    return out / xk.size

"""Replicated Monte Carlo experiments on the limit theorems.

Replication ``r`` simulates its tree from stream ``(base_seed, r)``, so the
report does not depend on how replications are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .asymptotics import LimitMatrices, limit_matrices
from .estimators import residuals, wls_covariance, wls_theta, wls_variances
from .model import HypothesisReport, ModelSpec, derive_moments, validate_hypotheses
from .simulate import TSampleConfig, sample_T, simulate_tree
from .tree import subtree_size

ESTIMATORS = ("theta", "eta", "zeta", "nu")
COORDS = {
    "theta": ("a", "c", "b", "d"),
    "eta": ("sigma2_a", "sigma2_c"),
    "zeta": ("sigma2_b", "sigma2_d"),
    "nu": ("rho_ab", "rho_cd"),
}
# one-sample Kolmogorov-Smirnov asymptotic critical values, times 1/sqrt(n)
KS_CRITICAL = {0.01: 1.63, 0.05: 1.36}


def ks_critical(n: int, level: float = 0.01) -> float:
    return KS_CRITICAL[level] / math.sqrt(n)


class HypothesisFailure(RuntimeError):
    def __init__(self, report: HypothesisReport):
        super().__init__("model violates the moment hypotheses:\n" + "\n".join(report.lines()))
        self.report = report


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ModelSpec
    n: int
    replications: int
    base_seed: int
    workers: int = 1
    limit_samples: int = 10**6
    check_hypotheses: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.replications < 1 or self.workers < 1:
            raise ValueError("replications and workers must be positive")


@dataclass(frozen=True)
class CoordStats:
    skewness: float
    excess_kurtosis: float
    ks: float
    degenerate: bool = False


def normality_stats(samples, target_cov) -> list[CoordStats]:
    """Skewness, excess kurtosis and KS distance to N(0, 1) of each coordinate.

    Coordinates are divided by the target standard deviation before the KS
    statistic is taken. A constant coordinate is flagged ``degenerate``; its
    moment ratios are NaN and its KS distance is max(F(v), 1 - F(v)) >= 1/2.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    cov = np.atleast_2d(np.asarray(target_cov, dtype=float))
    if x.shape[0] < 100:
        raise ValueError("normality statistics need at least 100 samples")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("target covariance is not positive definite") from None
    out = []
    n = x.shape[0]
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    for j in range(x.shape[1]):
        z = np.sort(x[:, j] / math.sqrt(cov[j, j]))
        F = ndtr(z)
        ks = float(max((ecdf_hi - F).max(), (F - ecdf_lo).max()))
        if z[0] == z[-1]:
            out.append(CoordStats(math.nan, math.nan, ks, True))
            continue
        dev = z - z.mean()
        m2 = float(np.mean(dev**2))
        skew = float(np.mean(dev**3)) / m2**1.5
        exkurt = float(np.mean(dev**4)) / m2**2 - 3.0
        out.append(CoordStats(skew, exkurt, ks))
    return out


def qsl_statistic(theta_path, Lambda, theta) -> np.ndarray:
    """Running mean over k of ``|T_{k-1}| (theta_k - theta)^t Lambda (theta_k - theta)``.

    ``theta_path[k-1]`` holds the estimate at generation ``k``.
    """
    err = np.asarray(theta_path, dtype=float) - np.asarray(theta, dtype=float)
    sizes = np.array([subtree_size(k - 1) for k in range(1, len(err) + 1)], dtype=float)
    terms = sizes * np.einsum("ki,ij,kj->k", err, np.asarray(Lambda, dtype=float), err)
    return np.cumsum(terms) / np.arange(1, len(err) + 1)


@dataclass
class _RepResult:
    errors: dict  # estimator -> (n, dim) errors at generations 1..n


def _replicate(args) -> _RepResult:
    spec, n, seed, r, truth = args
    tree = simulate_tree(spec, n, seed, replication=r)
    errs = {k: np.empty((n, len(COORDS[k]))) for k in ESTIMATORS}
    for g in range(1, n + 1):
        theta_hat, _ = wls_theta(tree, g)
        res = residuals(tree, theta_hat, g)
        eta_hat, zeta_hat, _ = wls_variances(tree, res, g)
        nu_hat = wls_covariance(tree, res, g)
        for name, est in zip(ESTIMATORS, (theta_hat, eta_hat, zeta_hat, nu_hat)):
            errs[name][g - 1] = est - truth[name]
    return _RepResult(errs)


@dataclass(frozen=True)
class ExperimentReport:
    n: int
    replications: int
    scaled_errors: dict
    empirical_mean: dict
    empirical_cov: dict
    target_cov: dict | None
    normality: dict | None
    rate_series: dict
    qsl_series: np.ndarray | None
    qsl_target: float | None
    hypotheses: HypothesisReport = field(repr=False)


def default_limits(spec: ModelSpec, seed: int, samples: int = 10**6) -> LimitMatrices:
    t = sample_T(spec, TSampleConfig.for_spec(spec), seed, samples)
    return limit_matrices(derive_moments(spec), t)


def run_experiment(cfg: ExperimentConfig, limits: LimitMatrices | None = None) -> ExperimentReport:
    m = derive_moments(cfg.spec)
    report = validate_hypotheses(m, cfg.spec)
    if cfg.check_hypotheses and not report.passed:
        raise HypothesisFailure(report)
    if limits is None and report.passed:
        limits = default_limits(cfg.spec, cfg.base_seed, cfg.limit_samples)

    truth = {"theta": m.theta, "eta": m.eta, "zeta": m.zeta, "nu": m.nu}
    jobs = [(cfg.spec, cfg.n, cfg.base_seed, r, truth) for r in range(cfg.replications)]
    if cfg.workers == 1:
        results = [_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))

    n = cfg.n
    sizes = np.array([subtree_size(k - 1) for k in range(1, n + 1)], dtype=float)
    scaled, mean, cov, rates = {}, {}, {}, {}
    for name in ESTIMATORS:
        path = np.stack([res.errors[name] for res in results])  # (R, n, dim)
        scaled[name] = math.sqrt(sizes[-1]) * path[:, -1, :]
        mean[name] = scaled[name].mean(axis=0)
        cov[name] = (np.cov(scaled[name], rowvar=False).reshape(path.shape[2], path.shape[2])
                     if cfg.replications > 1 else np.zeros((path.shape[2],) * 2))
        rates[name] = sizes * np.sum(path**2, axis=2) / np.arange(1, n + 1)

    target = normality = qsl = qsl_target = None
    if limits is not None:
        target = {"theta": limits.cov_theta, "eta": limits.cov_eta,
                  "zeta": limits.cov_zeta, "nu": limits.cov_nu}
        if cfg.replications >= 100:
            normality = {k: normality_stats(scaled[k], target[k]) for k in ESTIMATORS}
        theta_paths = [res.errors["theta"] + m.theta for res in results]
        qsl = np.stack([qsl_statistic(p, limits.Lambda, m.theta) for p in theta_paths])
        qsl_target = limits.qsl_target()

    return ExperimentReport(
        n=n, replications=cfg.replications, scaled_errors=scaled,
        empirical_mean=mean, empirical_cov=cov, target_cov=target,
        normality=normality, rate_series=rates, qsl_series=qsl,
        qsl_target=qsl_target, hypotheses=report,
    )

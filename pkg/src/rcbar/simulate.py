"""Simulation of trees, random branches and the tail variable T.

Tree draws are addressed by node label: node ``k`` owns eight uniform slots
at words ``8(k-1) .. 8k-1`` of its replication's stream, laid out as

    0 coeff shared   1 coeff left    2 coeff right
    3 noise shared   4 noise left    5 noise right
    6 root value (node 1 only)       7 unused

so any node's ``(a_k, b_k, eps_2k, eps_2k+1)`` can be recomputed on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import rng
from .model import ComponentDist, DerivedMoments, ModelSpec, PairSpec, abs_mean_bound
from .tree import MAX_GENERATION, LabelOverflowError, TreeShape, subtree_size


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Draws:
    """Per non-leaf node draws, offset ``k - 1`` holds node ``k``."""
    a: np.ndarray
    b: np.ndarray
    eps_even: np.ndarray
    eps_odd: np.ndarray


@dataclass(frozen=True)
class TreeData:
    shape: TreeShape
    x: np.ndarray
    draws: Draws | None = None

    @property
    def n(self) -> int:
        return self.shape.max_generation

    def value(self, k: int) -> float:
        return float(self.x[k - 1])

    def generation(self, g: int) -> np.ndarray:
        return self.x[self.shape.generation_slice(g)]

    def family(self, n: int):
        """``(X_k, X_2k, X_2k+1)`` for every ``k`` in generations ``0..n-1``."""
        if not 1 <= n <= self.n:
            raise ValueError(f"tree has generations 0..{self.n}, cannot use n={n}")
        m = subtree_size(n - 1)
        return self.x[:m], self.x[1 : 2 * m : 2], self.x[2 : 2 * m + 1 : 2]

    def swapped(self) -> "TreeData":
        """Mirror image: every sibling pair exchanged along with its subtrees.

        Mirroring the whole tree is the same as reversing each generation.
        """
        x = self.x.copy()
        for g in range(1, self.n + 1):
            sl = self.shape.generation_slice(g)
            x[sl] = x[sl][::-1]
        return TreeData(self.shape, _readonly(x))


def _pair_values(pair: PairSpec, u: np.ndarray):
    """Left and right members of a pair from slot columns (shared, left, right)."""
    s = pair.shared.quantile(u[:, 0])
    return s + pair.left_extra.quantile(u[:, 1]), s + pair.right_extra.quantile(u[:, 2])


def node_draws(spec: ModelSpec, seed: int, k: int, replication: int = 0):
    """Recompute ``(a_k, b_k, eps_2k, eps_2k+1)`` for one node in isolation."""
    u = rng.uniforms(seed, replication, rng.PURPOSE_TREE,
                     (k - 1) * rng.SLOTS_PER_NODE, rng.SLOTS_PER_NODE)[None, :]
    a, b = _pair_values(spec.coeff, u[:, 0:3])
    e0, e1 = _pair_values(spec.noise, u[:, 3:6])
    return float(a[0]), float(b[0]), float(e0[0]), float(e1[0])


def simulate_tree(spec: ModelSpec, n: int, seed: int, record_draws: bool = False,
                  replication: int = 0) -> TreeData:
    """Simulate generations ``0..n`` of the tree for one replication stream."""
    if n > MAX_GENERATION:
        raise LabelOverflowError(f"generation {n} exceeds the cap of {MAX_GENERATION}")
    shape = TreeShape(n)
    inner = subtree_size(n - 1) if n >= 1 else 0
    u = rng.uniforms(seed, replication, rng.PURPOSE_TREE, 0,
                     max(inner, 1) * rng.SLOTS_PER_NODE).reshape(-1, rng.SLOTS_PER_NODE)

    x = np.empty(shape.size)
    x[0] = spec.root.quantile(u[:1, 6])[0]
    draws = None
    if inner:
        a, b = _pair_values(spec.coeff, u[:inner, 0:3])
        e0, e1 = _pair_values(spec.noise, u[:inner, 3:6])
        for g in range(n):
            lo, hi = 2**g - 1, 2 ** (g + 1) - 1
            xp = x[lo:hi]
            x[2 * lo + 1 : 2 * hi + 1 : 2] = a[lo:hi] * xp + e0[lo:hi]
            x[2 * lo + 2 : 2 * hi + 2 : 2] = b[lo:hi] * xp + e1[lo:hi]
        if record_draws:
            draws = Draws(*(_readonly(v) for v in (a, b, e0, e1)))
    return TreeData(shape, _readonly(x), draws)


def true_noise(t: TreeData, m: DerivedMoments):
    """Centred innovations ``V_2k = X_2k - a X_k - c`` and ``V_2k+1`` for all non-leaf k."""
    xk, x0, x1 = t.family(t.n)
    return x0 - m.a * xk - m.c, x1 - m.b * xk - m.d


@dataclass(frozen=True)
class BranchPath:
    y: np.ndarray
    kappa: np.ndarray
    node_trace: tuple[int, ...] | None


def simulate_branch(spec: ModelSpec, m: int, seed: int, replication: int = 0,
                    kappa=None) -> BranchPath:
    """Values along one uniformly random root-to-leaf path of length ``m``.

    Step ``j`` draws its coefficient pair, noise pair and branch choice from
    slots ``8j .. 8j+6`` of a dedicated stream. Labels along the path are
    only reported while they stay within the generation cap.
    """
    if m < 1:
        raise ValueError("branch length must be >= 1")
    u = rng.uniforms(seed, replication, rng.PURPOSE_BRANCH, 0,
                     m * rng.SLOTS_PER_NODE).reshape(m, rng.SLOTS_PER_NODE)
    if kappa is None:
        kap = (u[1:, 6] >= 0.5).astype(np.int8)
    else:
        kap = np.asarray(kappa, dtype=np.int8)
        if kap.shape != (m - 1,) or not np.isin(kap, (0, 1)).all():
            raise ValueError(f"kappa must be m - 1 = {m - 1} bits")
    a, b = _pair_values(spec.coeff, u[1:, 0:3])
    e0, e1 = _pair_values(spec.noise, u[1:, 3:6])
    coef = np.where(kap == 0, a, b)
    eps = np.where(kap == 0, e0, e1)

    y = np.empty(m)
    y[0] = spec.root.quantile(u[:1, 6])[0]
    for j in range(1, m):
        y[j] = coef[j - 1] * y[j - 1] + eps[j - 1]

    trace = None
    if m - 1 <= MAX_GENERATION:
        k = [1]
        for bit in kap:
            k.append(2 * k[-1] + int(bit))
        trace = tuple(k)
    return BranchPath(_readonly(y), _readonly(kap), trace)


def _abs_mean_selected(pair: PairSpec) -> float:
    return 0.5 * (abs_mean_bound((pair.shared, pair.left_extra))
                  + abs_mean_bound((pair.shared, pair.right_extra)))


def truncation_bound(spec: ModelSpec, depth: int) -> float:
    """Upper bound on E|T - T_depth| from the geometric tail of the series."""
    r = _abs_mean_selected(spec.coeff)
    if r >= 1:
        return math.inf
    return r ** (depth - 1) * _abs_mean_selected(spec.noise) / (1 - r)


@dataclass(frozen=True)
class TSampleConfig:
    depth: int
    target_bias: float = 1e-8

    @classmethod
    def for_spec(cls, spec: ModelSpec, target_bias: float = 1e-8) -> "TSampleConfig":
        if not target_bias > 0:
            raise ValueError("target_bias must be positive")
        r = _abs_mean_selected(spec.coeff)
        if r >= 1:
            raise ValueError(f"E|a~| = {r:.6g} >= 1, the truncation bound is unusable")
        depth = 2
        while truncation_bound(spec, depth) > target_bias:
            depth += 1
        return cls(depth, target_bias)


def _select_quantile(left: ComponentDist, right: ComponentDist, pick_right, u):
    if left.family == right.family == "normal":
        mean = np.where(pick_right, right.mean, left.mean)
        sd = np.where(pick_right, math.sqrt(right.variance), math.sqrt(left.variance))
        return mean + sd * ndtri(u)
    if left.family == right.family == "exponential":
        return -np.log(u) / np.where(pick_right, right.rate, left.rate)
    return np.where(pick_right, right.quantile(u), left.quantile(u))


def _selected_member(pair: PairSpec, pick_right, u_shared, u_extra):
    """Left or right member of a pair, chosen per sample by ``pick_right``."""
    s, l, r = pair.components()
    if s.family == l.family == r.family == "normal":
        # a sum of independent normals is normal: one quantile call instead of two
        mean = np.where(pick_right, s.mean + r.mean, s.mean + l.mean)
        sd = np.where(pick_right, math.sqrt(s.variance + r.variance),
                      math.sqrt(s.variance + l.variance))
        return mean + sd * ndtri(u_extra)
    return s.quantile(u_shared) + _select_quantile(l, r, pick_right, u_extra)


T_CHUNK = 1 << 16
_T_SLOTS = 5  # kappa, coeff shared, coeff extra, noise shared, noise extra


def sample_T(spec: ModelSpec, cfg: TSampleConfig, seed: int, count: int) -> np.ndarray:
    """I.i.d. draws of the truncated series ``sum_{k=2}^{depth} a~_2..a~_{k-1} e_k``.

    Each term uses fresh ``(a~_k, e_k)`` pairs that share their branch choice.
    Samples are produced in fixed chunks of ``T_CHUNK``, chunk ``i`` keyed by
    ``(seed, i)``, so a shorter request is a prefix of a longer one.
    """
    bound = truncation_bound(spec, cfg.depth)
    if math.isinf(bound):
        raise ValueError("E|a~| >= 1, the tail variable cannot be sampled by truncation")
    if bound > cfg.target_bias * (1 + 1e-12):
        raise ValueError(
            f"depth {cfg.depth} gives bias bound {bound:.3g} > target {cfg.target_bias:.3g}")
    out = np.empty(count)
    cp, np_ = spec.coeff, spec.noise
    for chunk, start in enumerate(range(0, count, T_CHUNK)):
        size = min(T_CHUNK, count - start)
        bg = rng.bit_generator(seed, chunk, rng.PURPOSE_TSAMPLE)
        total = np.zeros(size)
        prod = np.ones(size)
        for _ in range(2, cfg.depth + 1):
            u = rng.to_uniform(bg.random_raw(_T_SLOTS * T_CHUNK)).reshape(_T_SLOTS, T_CHUNK)[:, :size]
            right = u[0] >= 0.5
            coef = _selected_member(cp, right, u[1], u[2])
            eps = _selected_member(np_, right, u[3], u[4])
            total += prod * eps
            prod *= coef
        out[start : start + size] = total
    return out

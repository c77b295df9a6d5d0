"""CSV import/export. Floats are written with 17 significant digits."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .asymptotics import LimitMatrices
from .estimators import EstimateSet
from .experiments import COORDS, ESTIMATORS, ExperimentReport
from .simulate import Draws, TreeData
from .tree import TreeShape

TREE_HEADER = ["node", "value"]
DRAW_HEADER = ["a", "b", "eps_even", "eps_odd"]
ESTIMATE_HEADER = ["n", "a_hat", "c_hat", "b_hat", "d_hat", "sa2", "sc2", "sb2", "sd2",
                   "rab", "rcd", "regularized"]
HIST_BINS = 40


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def write_tree_csv(path, t: TreeData):
    header = TREE_HEADER + (DRAW_HEADER if t.draws is not None else [])
    inner = len(t.draws.a) if t.draws is not None else 0

    def rows():
        for i, x in enumerate(t.x):
            row = [i + 1, x]
            if t.draws is not None:
                if i < inner:
                    row += [t.draws.a[i], t.draws.b[i], t.draws.eps_even[i], t.draws.eps_odd[i]]
                else:
                    row += ["", "", "", ""]
            yield row

    _write(path, header, rows())


class TreeFormatError(ValueError):
    pass


def read_tree_csv(path) -> TreeData:
    path = Path(path)
    with path.open(newline="") as fh:
        r = csv.reader(fh)
        try:
            header = next(r)
        except StopIteration:
            raise TreeFormatError(f"{path}: empty file") from None
        if header not in (TREE_HEADER, TREE_HEADER + DRAW_HEADER):
            raise TreeFormatError(f"{path}:1: unexpected header {header}")
        with_draws = len(header) == 6
        xs, draws = [], []
        for lineno, row in enumerate(r, start=2):
            if len(row) != len(header):
                raise TreeFormatError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                node = int(row[0])
                xs.append(float(row[1]))
                if with_draws and row[2] != "":
                    draws.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise TreeFormatError(f"{path}:{lineno}: {exc}") from None
            if node != len(xs):
                raise TreeFormatError(f"{path}:{lineno}: nodes must be listed 1, 2, 3, ...")
    size = len(xs)
    n = size.bit_length() - 1
    if size == 0 or size != 2 ** (n + 1) - 1:
        raise TreeFormatError(f"{path}: {size} nodes is not a complete tree")
    x = np.array(xs)
    x.flags.writeable = False
    d = None
    if with_draws:
        if len(draws) != 2**n - 1:
            raise TreeFormatError(f"{path}: draws must cover exactly the non-leaf nodes")
        arr = np.array(draws).reshape(-1, 4)
        d = Draws(*(np.ascontiguousarray(arr[:, j]) for j in range(4)))
    return TreeData(TreeShape(n), x, d)


def write_estimates_csv(path, estimates: list[EstimateSet]):
    _write(path, ESTIMATE_HEADER, (e.row() for e in estimates))


def write_limits_csv(path, lm: LimitMatrices):
    def rows():
        for name, mat in lm.named().items():
            se = lm.mc_se.get(name)
            for i in range(mat.shape[0]):
                for j in range(mat.shape[1]):
                    yield [name, i, j, mat[i, j], se[i, j] if se is not None else ""]

    _write(path, ["matrix", "row", "col", "value", "mc_se"], rows())


def _coord_names():
    for name in ESTIMATORS:
        for c in COORDS[name]:
            yield name, c


def write_report(outdir, rep: ExperimentReport):
    """Write the experiment CSV bundle into ``outdir``; returns the file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {}

    def scaled_rows():
        for r in range(rep.replications):
            for name in ESTIMATORS:
                for j, c in enumerate(COORDS[name]):
                    yield [r, f"{name}.{c}", rep.scaled_errors[name][r, j]]

    paths["scaled_errors"] = outdir / "scaled_errors.csv"
    _write(paths["scaled_errors"], ["replication", "coord", "value"], scaled_rows())

    def summary_rows():
        for name in ESTIMATORS:
            sd = np.sqrt(np.diag(rep.empirical_cov[name]))
            for j, c in enumerate(COORDS[name]):
                if rep.normality is not None:
                    s = rep.normality[name][j]
                    extra = [s.skewness, s.excess_kurtosis, s.ks]
                else:
                    extra = ["", "", ""]
                yield [name, c, rep.empirical_mean[name][j], sd[j], *extra]

    paths["summary"] = outdir / "summary.csv"
    _write(paths["summary"], ["estimator", "coord", "mean", "sd", "skew", "exkurt", "ks"],
           summary_rows())

    def rate_rows():
        for k in range(1, rep.n + 1):
            for name in ESTIMATORS:
                v = rep.rate_series[name][:, k - 1]
                q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
                yield [k, name, med, q25, q75]

    paths["rates"] = outdir / "rates.csv"
    _write(paths["rates"], ["n", "statistic", "median", "q25", "q75"], rate_rows())

    def qsl_rows():
        if rep.qsl_series is None:
            return
        med = np.median(rep.qsl_series, axis=0)
        for k in range(1, rep.n + 1):
            yield [k, med[k - 1], rep.qsl_target]

    paths["qsl"] = outdir / "qsl.csv"
    _write(paths["qsl"], ["n", "value", "target_trace"], qsl_rows())

    def hist_rows():
        for name in ESTIMATORS:
            for j, c in enumerate(COORDS[name]):
                v = rep.scaled_errors[name][:, j]
                lo, hi = float(v.min()), float(v.max())
                if lo == hi:
                    lo, hi = lo - 0.5, hi + 0.5
                counts, edges = np.histogram(v, bins=HIST_BINS, range=(lo, hi))
                for b in range(HIST_BINS):
                    yield [f"{name}.{c}", edges[b], edges[b + 1], int(counts[b])]

    paths["hist"] = outdir / "hist.csv"
    _write(paths["hist"], ["coord", "bin_lo", "bin_hi", "count"], hist_rows())
    return paths

"""Pairwise association machinery.

Correlation matrices with bootstrap/partial/stratified variants, tetrachoric
estimation from 2x2 pass/fail tables (latent bivariate-normal model solved by
bracketed root finding), average-linkage clustering on 1-|r| distances,
redundancy/complementarity flags, and the Hamming baseline.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import kendalltau, norm, rankdata

from .matrix_io import ScoreMatrix
from .spectral import participation_ratio

CORR_METHODS = ("pearson", "spearman", "kendall", "tetrachoric")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_RHO_CLAMP = 0.999

__all__ = [
    "ClusterGrouping",
    "CorrMatrix",
    "RedundancyFlags",
    "correlation_ci",
    "hierarchical_cluster",
    "mean_pairwise_hamming",
    "pairwise_correlation",
    "partial_correlation",
    "redundancy_flags",
    "save_corr_csv",
    "stratified_correlation",
    "tetrachoric",
    "tetrachoric_ed",
    "tetrachoric_matrix",
]


@dataclass(frozen=True)
class CorrMatrix:
    """Symmetric pairwise correlation table tagged with its method.

    Entries involving a flagged zero-variance series are NaN.
    """

    ids: tuple[str, ...]
    values: np.ndarray
    method: str
    degenerate_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        p = len(self.ids)
        if values.shape != (p, p):
            raise ValueError("correlation grid must be square and match ids")
        finite = np.isfinite(values)
        if not np.array_equal(finite, finite.T):
            raise ValueError("undefined entries must be symmetric")
        if np.nanmax(np.abs(values - values.T)) > 1e-12:
            raise ValueError("correlation matrix must be symmetric")
        diag = np.diag(values)
        if not np.allclose(diag[np.isfinite(diag)], 1.0, atol=1e-12):
            raise ValueError("diagonal must be one")
        if np.nanmax(np.abs(values)) > 1.0 + 1e-12:
            raise ValueError("correlations must lie in [-1, 1]")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "degenerate_ids", tuple(self.degenerate_ids))

    @property
    def has_undefined(self) -> bool:
        return bool(np.isnan(self.values).any())


@dataclass(frozen=True)
class ClusterGrouping:
    """Average-linkage merge tree plus the flat partition at the chosen cut."""

    ids: tuple[str, ...]
    merges: tuple[tuple[tuple[str, ...], tuple[str, ...], float], ...]
    groups: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class RedundancyFlags:
    """Task-pair lists at the maintainer-workflow thresholds."""

    redundant: tuple[tuple[str, str, float], ...]
    vet_fail: tuple[tuple[str, str, float], ...]
    complementary: tuple[tuple[str, str, float], ...]


def _pair_corr(x: np.ndarray, y: np.ndarray, method: str) -> float:
    if method == "pearson":
        return float(np.corrcoef(x, y)[0, 1])
    if method == "spearman":
        return float(np.corrcoef(rankdata(x), rankdata(y))[0, 1])
    if method == "kendall":
        return float(kendalltau(x, y).statistic)
    raise ValueError(f"unknown correlation method: {method!r}")


def pairwise_correlation(rows, ids=None, method: str = "spearman") -> CorrMatrix:
    """Correlation matrix over the rows of a p x n score table.

    Spearman uses average ranks; Kendall is the tie-corrected tau-b.
    Zero-variance series produce NaN entries and are listed in
    ``degenerate_ids``.
    """
    table = np.asarray(rows, dtype=float)
    if table.ndim != 2:
        raise ValueError("expected a 2-D score table (series as rows)")
    p, n = table.shape
    if n < 3:
        raise ValueError("need at least three paired observations per series")
    if ids is None:
        ids = [f"series_{i}" for i in range(p)]
    ids = [str(i) for i in ids]
    degenerate = [ids[i] for i in range(p) if np.all(table[i] == table[i, 0])]
    values = np.full((p, p), np.nan)
    np.fill_diagonal(values, 1.0)
    for i in range(p):
        if ids[i] in degenerate:
            continue
        for j in range(i + 1, p):
            if ids[j] in degenerate:
                continue
            r = _pair_corr(table[i], table[j], method)
            values[i, j] = values[j, i] = r
    for d in degenerate:
        k = ids.index(d)
        values[k, k] = np.nan
    return CorrMatrix(tuple(ids), values, method, tuple(degenerate))


def correlation_ci(
    x,
    y,
    method: str = "spearman",
    iterations: int = 10000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for a pairwise correlation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length vectors")
    n = x.size
    stats = []
    for i in range(iterations):
        rng = np.random.default_rng((seed, i))
        idx = rng.integers(0, n, size=n)
        xs, ys = x[idx], y[idx]
        if np.all(xs == xs[0]) or np.all(ys == ys[0]):
            continue
        stats.append(_pair_corr(xs, ys, method))
    if not stats:
        raise ValueError("all bootstrap resamples were degenerate")
    alpha = (1.0 - level) / 2.0
    low, high = np.percentile(stats, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    return float(low), float(high)


def partial_correlation(x, y, z, method: str = "spearman") -> float:
    """Correlation of x and y after regressing out the covariate z.

    Under ``spearman`` all three vectors are rank-transformed first.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if not x.shape == y.shape == z.shape or x.ndim != 1:
        raise ValueError("x, y, z must be equal-length vectors")
    if x.size < 10:
        raise ValueError("partial correlation needs at least ten observations")
    if np.all(z == z[0]):
        raise ValueError("covariate z is constant")
    if method == "spearman":
        x, y, z = rankdata(x), rankdata(y), rankdata(z)
    elif method != "pearson":
        raise ValueError(f"unsupported method for partial correlation: {method!r}")
    design = np.column_stack([np.ones_like(z), z])
    rx = x - design @ np.linalg.lstsq(design, x, rcond=None)[0]
    ry = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
    # both series fully explained by z: no residual signal left to correlate
    tol = 1e-8 * max(np.std(x), np.std(y), 1.0)
    if np.std(rx) < tol or np.std(ry) < tol:
        return 0.0
    return float(np.corrcoef(rx, ry)[0, 1])


def stratified_correlation(x, y, strata, min_reliable: int = 5, levels=None):
    """Per-stratum Spearman correlations.

    Returns a list of ``(label, n, rho, reliable)`` records; groups smaller
    than ``min_reliable`` are flagged unreliable, and explicitly requested
    ``levels`` with no members are omitted with a warning.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    strata = np.asarray(strata)
    if not x.shape == y.shape == strata.shape:
        raise ValueError("x, y, strata must align")
    if levels is None:
        levels = sorted(set(strata.tolist()), key=str)
    out = []
    for label in levels:
        mask = strata == label
        n = int(mask.sum())
        if n == 0:
            warnings.warn(f"stratum {label!r} is empty; omitted")
            continue
        if n < 3 or np.all(x[mask] == x[mask][0]) or np.all(y[mask] == y[mask][0]):
            rho = float("nan")
        else:
            rho = _pair_corr(x[mask], y[mask], "spearman")
        out.append((label, n, rho, n >= min_reliable))
    return out


def _bivariate_cdf(h: float, k: float, rho: float) -> float:
    """P(Z1 <= h, Z2 <= k) for standard bivariate normal with correlation rho.

    One-dimensional Gauss-Legendre quadrature (64 nodes) over the correlation
    parameter of the standard integral representation.
    """
    base = norm.cdf(h) * norm.cdf(k)
    if rho == 0.0:
        return float(base)
    r = 0.5 * rho * (_GL_NODES + 1.0)
    w = 0.5 * abs(rho) * _GL_WEIGHTS
    onem = 1.0 - r * r
    integrand = np.exp(-(h * h - 2.0 * h * k * r + k * k) / (2.0 * onem)) / np.sqrt(onem)
    return float(base + np.sign(rho) * (integrand @ w) / (2.0 * np.pi))


def _orthant_probability(h: float, k: float, rho: float) -> float:
    return 1.0 - norm.cdf(h) - norm.cdf(k) + _bivariate_cdf(h, k, rho)


def tetrachoric(table) -> float:
    """Latent-normal correlation from a 2x2 contingency table.

    Table layout ``[[n11, n10], [n01, n00]]`` with n11 = both pass. Solves for
    the rho whose orthant probability at the threshold pair matches the
    observed joint pass frequency. A zero cell clamps the result to +/-0.999.
    """
    t = np.asarray(table, dtype=float)
    if t.shape != (2, 2) or t.min() < 0:
        raise ValueError("expected a 2x2 table of nonnegative counts")
    n11, n10 = t[0]
    n01, n00 = t[1]
    n = t.sum()
    p_row = (n11 + n10) / n
    p_col = (n11 + n01) / n
    if p_row in (0.0, 1.0) or p_col in (0.0, 1.0):
        raise ValueError("tetrachoric undefined: zero marginal")
    if n11 == 0.0 or n00 == 0.0:
        return -_RHO_CLAMP
    if n10 == 0.0 or n01 == 0.0:
        return _RHO_CLAMP
    h = norm.ppf(1.0 - p_row)
    k = norm.ppf(1.0 - p_col)
    target = n11 / n

    def objective(rho: float) -> float:
        return _orthant_probability(h, k, rho) - target

    lo, hi = -0.999999, 0.999999
    if objective(lo) > 0.0:
        return -_RHO_CLAMP
    if objective(hi) < 0.0:
        return _RHO_CLAMP
    rho = brentq(objective, lo, hi, xtol=1e-10)
    assert abs(objective(rho)) < 1e-6
    return float(rho)


def tetrachoric_matrix(m: ScoreMatrix) -> np.ndarray:
    """Model x model tetrachoric correlation matrix over task outcomes."""
    if m.kind != "binary":
        raise ValueError("tetrachoric correction requires a binary matrix")
    if m.n_models < 3:
        raise ValueError("tetrachoric ED needs at least three models")
    values = m.dense_values().astype(bool)
    for j, model in enumerate(m.model_ids):
        col = values[:, j]
        if col.all() or not col.any():
            raise ValueError(
                f"model {model!r} has a constant outcome column (zero marginal)"
            )
    n = m.n_models
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            a = values[:, i]
            b = values[:, j]
            n11 = float(np.count_nonzero(a & b))
            n10 = float(np.count_nonzero(a & ~b))
            n01 = float(np.count_nonzero(~a & b))
            n00 = float(np.count_nonzero(~a & ~b))
            out[i, j] = out[j, i] = tetrachoric([[n11, n10], [n01, n00]])
    return out


def tetrachoric_ed(m: ScoreMatrix) -> float:
    """Participation ratio of the clipped tetrachoric-correlation eigenvalues."""
    corr = tetrachoric_matrix(m)
    eig = np.linalg.eigvalsh(corr)
    return participation_ratio(np.clip(eig, 0.0, None))


def hierarchical_cluster(
    c: CorrMatrix,
    cut_height: float | None = None,
    n_groups: int | None = None,
) -> ClusterGrouping:
    """Average-linkage agglomeration over distance 1 - |r|.

    Ties are broken by the lexicographically smallest member-id pair, which
    makes the tree invariant to input ordering. Exactly one of ``cut_height``
    and ``n_groups`` selects the flat partition (cut at a height keeps merges
    strictly below it).
    """
    if c.has_undefined:
        raise ValueError(
            f"undefined correlations present (degenerate: {list(c.degenerate_ids)})"
        )
    if (cut_height is None) == (n_groups is None):
        raise ValueError("specify exactly one of cut_height or n_groups")
    dist = 1.0 - np.abs(c.values)
    ids = c.ids
    clusters: list[tuple[str, ...]] = [(i,) for i in ids]
    index = {ids[i]: i for i in range(len(ids))}

    def linkage(a: tuple[str, ...], b: tuple[str, ...]) -> float:
        rows = [index[i] for i in a]
        cols = [index[j] for j in b]
        return float(dist[np.ix_(rows, cols)].mean())

    merges: list[tuple[tuple[str, ...], tuple[str, ...], float]] = []
    while len(clusters) > 1:
        best = None
        for ai in range(len(clusters)):
            for bi in range(ai + 1, len(clusters)):
                a, b = sorted((clusters[ai], clusters[bi]))
                key = (linkage(a, b), a, b)
                if best is None or key < best:
                    best = key
        d, a, b = best
        merges.append((a, b, d))
        clusters = [cl for cl in clusters if cl not in (a, b)]
        clusters.append(tuple(sorted(a + b)))

    groups: list[tuple[str, ...]] = [(i,) for i in ids]
    applied = 0
    for a, b, d in merges:
        if n_groups is not None:
            if len(groups) <= n_groups:
                break
        elif not d < cut_height:
            break
        groups = [g for g in groups if g not in (a, b)]
        groups.append(tuple(sorted(a + b)))
        applied += 1
    return ClusterGrouping(
        ids=ids, merges=tuple(merges), groups=tuple(sorted(groups))
    )


def redundancy_flags(
    c: CorrMatrix,
    hi: float = 0.9,
    vet: float = 0.7,
    comp: float = -0.3,
) -> RedundancyFlags:
    """Flag pairs above the redundancy/vetting thresholds or below the
    complementarity threshold."""
    redundant, vet_fail, complementary = [], [], []
    for i in range(len(c.ids)):
        for j in range(i + 1, len(c.ids)):
            rho = c.values[i, j]
            if not np.isfinite(rho):
                continue
            pair = (c.ids[i], c.ids[j], float(rho))
            if rho > hi:
                redundant.append(pair)
            if rho > vet:
                vet_fail.append(pair)
            if rho < comp:
                complementary.append(pair)
    return RedundancyFlags(tuple(redundant), tuple(vet_fail), tuple(complementary))


def mean_pairwise_hamming(m: ScoreMatrix) -> float:
    """Mean disagreement fraction over model pairs of a binary matrix."""
    if m.kind != "binary":
        raise ValueError("Hamming baseline requires a binary matrix")
    values = m.dense_values()
    n = m.n_models
    if n < 2:
        raise ValueError("need at least two models")
    total = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += float(np.mean(values[:, i] != values[:, j]))
            pairs += 1
    return total / pairs


def save_corr_csv(c: CorrMatrix, path) -> None:
    """Serialize a correlation matrix to square CSV with header ids."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *c.ids])
        for i, row_id in enumerate(c.ids):
            row = [row_id]
            for j in range(len(c.ids)):
                v = c.values[i, j]
                row.append("" if not np.isfinite(v) else repr(float(v)))
            writer.writerow(row)

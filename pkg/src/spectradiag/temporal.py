"""Population-ordered ED dynamics: sliding windows, trend tests, saturation.

Sliding-window ED over a performance-sorted population (optionally variance
standardized within windows), the Mann-Kendall monotone-trend test with tie
correction, hyperbolic saturation fits, fixed-variance control subsets,
cohort bootstrap comparison, and the diversity-insertion probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .composite import SuiteScores
from .matrix_io import ScoreMatrix
from .spectral import ed_of_matrix

__all__ = [
    "CohortComparison",
    "EdSeries",
    "MannKendall",
    "SaturationFit",
    "cohort_bootstrap_compare",
    "diversity_insertion_probe",
    "ed_vs_model_count",
    "fixed_variance_subset",
    "mann_kendall",
    "saturation_fit",
    "sliding_window_ed",
    "temporal_information_density",
]


@dataclass(frozen=True)
class EdSeries:
    """ED against an ordered axis (window end, model count, or cohort index)."""

    x: tuple[float, ...]
    ed: tuple[float, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.x) != len(self.ed):
            raise ValueError("x and ed must have equal lengths")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("x must be strictly increasing")

    def save_csv(self, path) -> None:
        """Two-column ``x,ed`` CSV for external plotting."""
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "ed"])
            writer.writerows(zip(self.x, self.ed))


def _window_ed(table: np.ndarray, standardize: bool) -> float:
    """Suite ED of a benchmarks x models block.

    With ``standardize`` each benchmark row is z-scored within the block
    (zero-variance rows contribute nothing either way).
    """
    x = table - table.mean(axis=1, keepdims=True)
    if standardize:
        std = table.std(axis=1, keepdims=True)
        scale = np.where(std > 0.0, std, 1.0)
        x = x / scale
    return ed_of_matrix(x, scheme="none")


def sliding_window_ed(
    s: SuiteScores,
    window: int = 500,
    step: int = 200,
    standardize: bool = False,
) -> EdSeries:
    """Per-window suite ED over a pre-sorted model population.

    The x axis is the window's end position (models covered so far).
    """
    if window > s.n_models:
        raise ValueError("window exceeds the model population")
    if window < 2 or step < 1:
        raise ValueError("window must be >= 2 and step >= 1")
    table = s.benchmark_table()
    xs: list[float] = []
    eds: list[float] = []
    start = 0
    while start + window <= s.n_models:
        block = table[:, start : start + window]
        xs.append(float(start + window))
        eds.append(_window_ed(block, standardize))
        start += step
    return EdSeries(
        x=tuple(xs),
        ed=tuple(eds),
        meta={"window": window, "step": step, "standardized": standardize},
    )


@dataclass(frozen=True)
class MannKendall:
    tau: float
    p: float
    s: int


def _mk_exact_p(n: int, s_obs: int) -> float:
    """Two-sided exact p for the untied Mann-Kendall statistic.

    Counts permutations by inversion number (S = n(n-1)/2 - 2 * inversions).
    """
    max_inv = n * (n - 1) // 2
    counts = np.zeros(max_inv + 1, dtype=float)
    counts[0] = 1.0
    for m in range(2, n + 1):
        new = np.zeros(max_inv + 1)
        cum = np.cumsum(counts)
        for inv in range(max_inv + 1):
            lo = inv - (m - 1)
            new[inv] = cum[inv] - (cum[lo - 1] if lo >= 1 else 0.0)
        counts = new
    total = counts.sum()
    s_values = max_inv - 2 * np.arange(max_inv + 1)
    prob = counts[np.abs(s_values) >= abs(s_obs)].sum() / total
    return float(min(1.0, prob))


def mann_kendall(series) -> MannKendall:
    """Monotone-trend test with tie-corrected tau.

    Uses exact enumeration for tie-free series of length <= 10, otherwise the
    normal approximation with continuity correction.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise ValueError("need a 1-D series of length >= 4")
    n = x.size
    s = 0
    for i in range(n - 1):
        s += int(np.sign(x[i + 1 :] - x[i]).sum())
    _, tie_counts = np.unique(x, return_counts=True)
    d1 = n * (n - 1) / 2.0
    d2 = d1 - float((tie_counts * (tie_counts - 1) / 2.0).sum())
    if d2 <= 0.0:
        return MannKendall(tau=0.0, p=1.0, s=0)
    tau = s / math.sqrt(d1 * d2)
    no_ties = bool(np.all(tie_counts == 1))
    if no_ties and n <= 10:
        p = _mk_exact_p(n, s)
    else:
        var_s = (
            n * (n - 1) * (2 * n + 5)
            - float((tie_counts * (tie_counts - 1) * (2 * tie_counts + 5)).sum())
        ) / 18.0
        if var_s <= 0.0:
            return MannKendall(tau=float(tau), p=1.0, s=s)
        if s > 0:
            z = (s - 1) / math.sqrt(var_s)
        elif s < 0:
            z = (s + 1) / math.sqrt(var_s)
        else:
            z = 0.0
        p = 2.0 * (1.0 - norm.cdf(abs(z)))
    return MannKendall(tau=float(tau), p=float(p), s=s)


@dataclass(frozen=True)
class SaturationFit:
    """Hyperbolic fit ED(n) = ed_inf * n / (n + n_half)."""

    ed_inf: float
    n_half: float
    rss: float
    boundary: bool = False

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return self.ed_inf * n / (n + self.n_half)


def saturation_fit(points, max_refine: int = 100) -> SaturationFit:
    """Fit the saturation model by linearized least squares plus Gauss-Newton.

    The linearized form 1/ED = 1/ed_inf + (n_half/ed_inf)(1/n) provides the
    start; damped Gauss-Newton refines on the original scale. A fit collapsing
    to n_half = 0 (constant series) is flagged as boundary rather than
    rejected; negative parameters reject the model.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (n, ed) pairs")
    n = pts[:, 0]
    ed = pts[:, 1]
    if np.unique(n).size < 3:
        raise ValueError("need at least three distinct n values")
    if np.any(n <= 0.0) or np.any(ed <= 0.0):
        raise ValueError("n and ed must be positive")
    design = np.column_stack([np.ones_like(n), 1.0 / n])
    coef, *_ = np.linalg.lstsq(design, 1.0 / ed, rcond=None)
    intercept, slope = coef
    if intercept <= 0.0:
        intercept = 1.0 / ed.max()
    a = 1.0 / intercept
    b = max(slope / intercept, 0.0)

    def rss_of(a_: float, b_: float) -> float:
        resid = ed - a_ * n / (n + b_)
        return float(np.dot(resid, resid))

    best = rss_of(a, b)
    for _ in range(max_refine):
        pred = a * n / (n + b)
        resid = ed - pred
        j_a = n / (n + b)
        j_b = -a * n / (n + b) ** 2
        jac = np.column_stack([j_a, j_b])
        try:
            step, *_ = np.linalg.lstsq(jac, resid, rcond=None)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        improved = False
        for _ in range(20):
            na = a + scale * step[0]
            nb = b + scale * step[1]
            if na > 0.0 and nb >= 0.0:
                cand = rss_of(na, nb)
                if cand < best - 1e-15:
                    a, b, best = na, nb, cand
                    improved = True
                    break
            scale *= 0.5
        if not improved:
            break
    if a <= 0.0 or b < 0.0:
        raise ValueError("saturation model rejected: non-positive parameters")
    boundary = bool(b < 1e-8 * max(1.0, float(np.median(n))))
    return SaturationFit(ed_inf=float(a), n_half=float(b), rss=best, boundary=boundary)


def ed_vs_model_count(
    m: ScoreMatrix,
    counts,
    trials: int = 20,
    seed: int = 0,
) -> list[tuple[int, float, float]]:
    """Mean/sd ED over random model subsets of each size."""
    values = m.dense_values()
    out = []
    for ci, count in enumerate(counts):
        if not 2 <= count <= m.n_models:
            raise ValueError(f"count {count} outside [2, {m.n_models}]")
        n_trials = 1 if count == m.n_models else trials
        eds = []
        for trial in range(n_trials):
            rng = np.random.default_rng((seed, ci, trial))
            cols = np.sort(rng.choice(m.n_models, size=count, replace=False))
            eds.append(ed_of_matrix(values[:, cols]))
        eds = np.asarray(eds)
        out.append((int(count), float(eds.mean()), float(eds.std())))
    return out


def fixed_variance_subset(
    m: ScoreMatrix,
    early_ids,
    late_ids,
    tol: float = 0.2,
    eps: float = 1e-9,
) -> list[str]:
    """Tasks whose variance moves less than ``tol`` (relative) between cohorts."""
    early = [m.model_index(i) for i in early_ids]
    late = [m.model_index(i) for i in late_ids]
    if not early or not late:
        raise ValueError("both cohorts must be nonempty")
    values = m.dense_values()
    var_early = values[:, early].var(axis=1)
    var_late = values[:, late].var(axis=1)
    keep = np.abs(var_late - var_early) / np.maximum(var_early, eps) < tol
    return [t for t, k in zip(m.task_ids, keep) if k]


@dataclass(frozen=True)
class CohortComparison:
    """Bootstrap ED comparison between two model cohorts (b minus a)."""

    delta: float
    ci: tuple[float, float]
    cohens_d: float
    p_direction: float
    iterations: int
    seed: int


def cohort_bootstrap_compare(
    s: SuiteScores,
    group_a,
    group_b,
    sample: int = 300,
    iterations: int = 1000,
    seed: int = 0,
) -> CohortComparison:
    """Resample both cohorts, compare their suite EDs.

    ``p_direction`` is the fraction of iterations with ED(b) > ED(a);
    Cohen's d is computed on the two bootstrap distributions.
    """
    idx_a = [s.model_ids.index(m) for m in group_a]
    idx_b = [s.model_ids.index(m) for m in group_b]
    if len(idx_a) < 10 or len(idx_b) < 10:
        raise ValueError("each cohort needs at least ten models")
    table = s.benchmark_table()
    ed_a = np.empty(iterations)
    ed_b = np.empty(iterations)
    for i in range(iterations):
        rng = np.random.default_rng((seed, i))
        cols_a = rng.choice(idx_a, size=sample, replace=True)
        cols_b = rng.choice(idx_b, size=sample, replace=True)
        ed_a[i] = _window_ed(table[:, cols_a], standardize=True)
        ed_b[i] = _window_ed(table[:, cols_b], standardize=True)
    deltas = ed_b - ed_a
    pooled = math.sqrt((ed_a.var() + ed_b.var()) / 2.0)
    d = float(deltas.mean() / pooled) if pooled > 0.0 else 0.0
    low, high = np.percentile(deltas, [2.5, 97.5])
    return CohortComparison(
        delta=float(deltas.mean()),
        ci=(float(low), float(high)),
        cohens_d=d,
        p_direction=float((ed_b > ed_a).mean()),
        iterations=iterations,
        seed=seed,
    )


def diversity_insertion_probe(
    m: ScoreMatrix,
    late_ids,
    early_ids,
    trials: int = 100,
    seed: int = 0,
) -> float:
    """Fraction of trials where inserting one random early model into the late
    cohort increases ED."""
    late = [m.model_index(i) for i in late_ids]
    early = [m.model_index(i) for i in early_ids]
    if not late or not early:
        raise ValueError("both cohorts must be nonempty")
    values = m.dense_values()
    base = ed_of_matrix(values[:, late])
    increases = 0
    for i in range(trials):
        rng = np.random.default_rng((seed, i))
        pick = int(rng.choice(early))
        ed_new = ed_of_matrix(values[:, late + [pick]])
        if ed_new > base:
            increases += 1
    return increases / trials


def temporal_information_density(series: EdSeries) -> float:
    """Least-squares slope of ED against the series axis."""
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.ed, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points")
    return float(np.polyfit(x, y, 1)[0])

"""Null calibration and statistical-stability checks for observed ED.

Covers the analytic random-matrix baseline, permutation nulls with per-rank
percentile bands, bootstrap confidence intervals, matched-dimension
subsampling, split-half reliability, metadata AUC, and the classical
factor-retention estimators used as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .matrix_io import ScoreMatrix
from .spectral import (
    Spectrum,
    center,
    ed_of_matrix,
    effective_dimensionality,
    pc1_fraction,
    principal_components,
    singular_spectrum,
)

__all__ = [
    "EdReport",
    "NullSpectrumBand",
    "alternative_estimators",
    "bootstrap_ed_ci",
    "build_ed_report",
    "matched_dimension_ed",
    "mp_null_ed",
    "pc_metadata_auc",
    "permutation_null",
    "significant_pcs",
    "split_half_reliability",
]


@dataclass(frozen=True)
class EdReport:
    """ED of one matrix together with its null calibration and stability."""

    ed: float
    pc1_pct: float
    ed_null: float
    ratio: float
    ci_low: float
    ci_high: float
    n_tasks: int
    n_models: int
    seed: int

    def __post_init__(self) -> None:
        if abs(self.ratio - self.ed / self.ed_null) > 1e-12 * max(1.0, self.ratio):
            raise ValueError("ratio must equal ed / ed_null")
        if not self.ci_low <= self.ed <= self.ci_high:
            raise ValueError("confidence interval must bracket the point estimate")

    def to_dict(self) -> dict:
        return {
            "ed": self.ed,
            "pc1_pct": self.pc1_pct,
            "ed_null": self.ed_null,
            "ratio": self.ratio,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_tasks": self.n_tasks,
            "n_models": self.n_models,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class NullSpectrumBand:
    """Per-rank 95th-percentile variance fractions under a permutation null."""

    band: np.ndarray
    replicates: int
    seed: int

    def __post_init__(self) -> None:
        band = np.asarray(self.band, dtype=float)
        if self.replicates < 2:
            raise ValueError("need at least two replicates")
        if np.any(np.diff(band) > 1e-12):
            raise ValueError("band must be nonincreasing in rank")
        band.flags.writeable = False
        object.__setattr__(self, "band", band)


def mp_null_ed(n_tasks: int, n_models: int) -> float:
    """Analytic null ED for an i.i.d. T x N matrix: T*N / (T + N)."""
    if n_tasks < 1 or n_models < 1:
        raise ValueError("matrix dimensions must be positive")
    return n_tasks * n_models / (n_tasks + n_models)


def _variance_fractions(values: np.ndarray) -> np.ndarray:
    lam = singular_spectrum(center(values)).sigmas ** 2
    total = lam.sum()
    if total <= 0.0:
        return np.zeros_like(lam)
    return lam / total


def permutation_null(
    m: ScoreMatrix,
    replicates: int = 100,
    seed: int = 0,
    axis: str = "rows",
) -> NullSpectrumBand:
    """Shuffle away inter-task correlation and collect the null spectrum band.

    ``axis="rows"`` (default) permutes each task row across model columns,
    preserving per-task difficulty marginals; ``axis="columns"`` permutes
    within model columns instead.
    """
    if replicates < 2:
        raise ValueError("need at least two replicates")
    if axis not in ("rows", "columns"):
        raise ValueError(f"axis must be 'rows' or 'columns', got {axis!r}")
    values = m.dense_values()
    fractions = np.empty((replicates, min(values.shape)))
    for r in range(replicates):
        rng = np.random.default_rng((seed, r))
        if axis == "rows":
            shuffled = np.array([rng.permutation(row) for row in values])
        else:
            shuffled = np.array([rng.permutation(col) for col in values.T]).T
        fractions[r] = _variance_fractions(shuffled)
    band = np.percentile(fractions, 95.0, axis=0)
    return NullSpectrumBand(band=band, replicates=replicates, seed=seed)


def significant_pcs(m: ScoreMatrix, band: NullSpectrumBand) -> int:
    """Largest r such that the leading r variance fractions all exceed the band."""
    observed = _variance_fractions(m.dense_values())
    count = 0
    for obs, null95 in zip(observed, band.band):
        if obs > null95:
            count += 1
        else:
            break
    return count


def bootstrap_ed_ci(
    m: ScoreMatrix,
    iterations: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    scheme: str = "task",
) -> tuple[float, float]:
    """Percentile interval of ED under model-column resampling.

    Degenerate resamples (every task row constant) carry no spectrum and are
    skipped.
    """
    if m.n_models < 5:
        raise ValueError("bootstrap needs at least five model columns")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    values = m.dense_values()
    eds = []
    for i in range(iterations):
        rng = np.random.default_rng((seed, i))
        idx = rng.integers(0, m.n_models, size=m.n_models)
        sub = values[:, idx]
        if np.all(sub == sub[:, :1]):
            continue
        eds.append(ed_of_matrix(sub, scheme))
    if not eds:
        raise ValueError("every bootstrap resample was degenerate")
    alpha = (1.0 - level) / 2.0
    low, high = np.percentile(eds, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    return float(low), float(high)


def matched_dimension_ed(
    m: ScoreMatrix,
    n_tasks: int,
    n_models: int,
    trials: int = 30,
    seed: int = 0,
) -> tuple[float, float]:
    """Mean/sd of ED over uniformly subsampled n_tasks x n_models grids."""
    if n_tasks > m.n_tasks or n_models > m.n_models:
        raise ValueError("requested dimensions exceed the available matrix")
    values = m.dense_values()
    if n_tasks == m.n_tasks and n_models == m.n_models:
        return ed_of_matrix(values), 0.0
    eds = []
    for i in range(trials):
        rng = np.random.default_rng((seed, i))
        rows = np.sort(rng.choice(m.n_tasks, size=n_tasks, replace=False))
        cols = np.sort(rng.choice(m.n_models, size=n_models, replace=False))
        eds.append(ed_of_matrix(values[np.ix_(rows, cols)]))
    eds = np.asarray(eds)
    return float(eds.mean()), float(eds.std())


def split_half_reliability(
    m: ScoreMatrix,
    k: int,
    splits: int = 50,
    seed: int = 0,
) -> np.ndarray:
    """Mean |loading correlation| of each leading PC across random model splits.

    Models are halved at random; per split the task-loading vectors of both
    halves are matched greedily by maximal absolute correlation.
    """
    if m.n_models < 10:
        raise ValueError("split-half reliability needs at least ten models")
    values = m.dense_values()
    half = m.n_models // 2
    k = min(k, half, m.n_tasks)
    sums = np.zeros(k)
    for s in range(splits):
        rng = np.random.default_rng((seed, s))
        perm = rng.permutation(m.n_models)
        load_a = principal_components(center(values[:, perm[:half]]), k).components
        load_b = principal_components(center(values[:, perm[half:]]), k).components
        corr = np.zeros((k, k))
        for i in range(k):
            for j in range(k):
                ai, bj = load_a[:, i], load_b[:, j]
                denom = np.linalg.norm(ai - ai.mean()) * np.linalg.norm(bj - bj.mean())
                if denom > 0.0:
                    corr[i, j] = abs(
                        np.dot(ai - ai.mean(), bj - bj.mean()) / denom
                    )
        matched = np.zeros(k)
        free_a = set(range(k))
        free_b = set(range(k))
        for _ in range(k):
            best = max(
                ((corr[i, j], i, j) for i in free_a for j in free_b),
                key=lambda t: (t[0], -t[1], -t[2]),
            )
            matched[best[1]] = best[0]
            free_a.discard(best[1])
            free_b.discard(best[2])
        sums += matched
    return sums / splits


def pc_metadata_auc(scores, labels) -> float:
    """Orientation-free AUC of ranking models by a PC score against flags.

    Ties receive the standard half credit; the larger of AUC and 1-AUC is
    reported since component sign is arbitrary.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must align")
    n_pos = int(labels.sum())
    n_neg = int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be nonempty")
    ranks = rankdata(scores)
    auc = (ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return float(max(auc, 1.0 - auc))


def _model_correlation_eigenvalues(values: np.ndarray) -> np.ndarray:
    if np.any(values.std(axis=0) == 0.0):
        raise ValueError("degenerate correlation matrix: constant model column")
    corr = np.corrcoef(values, rowvar=False)
    return np.sort(np.linalg.eigvalsh(corr))[::-1]


def alternative_estimators(
    m: ScoreMatrix,
    seed: int = 0,
    pa_replicates: int = 20,
) -> dict[str, int]:
    """Classical dimensionality counts on the model-correlation spectrum.

    Parallel analysis and broken-stick count leading eigenvalues until the
    first failure; Kaiser counts eigenvalues above one; var80/var90 count
    components needed to reach the cumulative-variance threshold.
    """
    values = m.dense_values()
    eig = _model_correlation_eigenvalues(values)
    p = eig.size

    null_eigs = np.empty((pa_replicates, p))
    for r in range(pa_replicates):
        rng = np.random.default_rng((seed, r))
        shuffled = np.array([rng.permutation(col) for col in values.T]).T
        null_eigs[r] = _model_correlation_eigenvalues(shuffled)
    pa_mean = null_eigs.mean(axis=0)
    pa = 0
    for obs, null in zip(eig, pa_mean):
        if obs > null:
            pa += 1
        else:
            break

    kaiser = int((eig > 1.0).sum())

    frac = eig / eig.sum()
    broken = (1.0 / p) * np.array([np.sum(1.0 / np.arange(i, p + 1)) for i in range(1, p + 1)])
    bs = 0
    for obs, stick in zip(frac, broken):
        if obs > stick:
            bs += 1
        else:
            break

    cum = np.cumsum(frac)
    var80 = int(np.searchsorted(cum, 0.8 - 1e-12) + 1)
    var90 = int(np.searchsorted(cum, 0.9 - 1e-12) + 1)
    return {
        "parallel_analysis": pa,
        "kaiser": kaiser,
        "broken_stick": bs,
        "var80": var80,
        "var90": var90,
    }


def build_ed_report(
    m: ScoreMatrix,
    seed: int = 0,
    bootstrap_iterations: int = 1000,
    scheme: str = "task",
) -> EdReport:
    """Full ED report: point estimate, PC1%, analytic null, ratio, CI.

    The bootstrap is skipped (degenerate interval) when fewer than five model
    columns are available or iterations is zero.
    """
    spectrum: Spectrum = singular_spectrum(center(m.dense_values(), scheme))
    ed = effective_dimensionality(spectrum)
    null = mp_null_ed(m.n_tasks, m.n_models)
    if bootstrap_iterations > 0 and m.n_models >= 5:
        low, high = bootstrap_ed_ci(
            m, iterations=bootstrap_iterations, seed=seed, scheme=scheme
        )
        low, high = min(low, ed), max(high, ed)
    else:
        low = high = ed
    return EdReport(
        ed=ed,
        pc1_pct=pc1_fraction(spectrum),
        ed_null=null,
        ratio=ed / null,
        ci_low=low,
        ci_high=high,
        n_tasks=m.n_tasks,
        n_models=m.n_models,
        seed=seed,
    )

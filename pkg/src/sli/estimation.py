"""Bayesian acceleration estimation, Fisher/Cramer-Rao analysis, Bragg baseline.

The measurement model is the final momentum distribution P(p | a) of the
interferometer, tabulated on a uniform acceleration grid by direct propagation.
Posteriors accumulate in log space with per-step renormalization so records of
10^4 measurements cannot underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .interferometer import InterferometerSequence, run
from .lattice import LatticeConfig


class DegenerateEvidenceError(RuntimeError):
    """Every grid point has zero likelihood for the observed record."""


def make_grid(a_min: float, a_max: float, points: int) -> np.ndarray:
    """Uniform, strictly increasing acceleration grid (wr*vr), >= 3 points."""
    if points < 3:
        raise ValueError("grid needs at least 3 points")
    if not a_min < a_max:
        raise ValueError("grid bounds must satisfy a_min < a_max")
    return np.linspace(a_min, a_max, points)


def _check_grid(grid: np.ndarray):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("grid must be 1-D with at least 3 points")
    steps = np.diff(grid)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9):
        raise ValueError("grid must be uniform and strictly increasing")
    return grid


_ROW_CONTEXT = {}


def _init_row_worker(seq, cfg):
    _ROW_CONTEXT["seq"] = seq
    _ROW_CONTEXT["cfg"] = cfg


def _likelihood_row(job: tuple[int, float]) -> np.ndarray:
    j, a = job
    try:
        return run(_ROW_CONTEXT["seq"], a, _ROW_CONTEXT["cfg"]).probabilities
    except Exception as err:
        raise RuntimeError(f"likelihood row {j} (a = {a}) failed: {err}") from err


def build_likelihood(
    seq: InterferometerSequence,
    grid: np.ndarray,
    cfg: LatticeConfig,
    workers: int = 1,
) -> np.ndarray:
    """P(p = 2n hbar kL | a_j) table, one propagated sequence per grid row."""
    grid = _check_grid(grid)
    jobs = list(enumerate(grid))
    if workers > 1:
        with Pool(workers, initializer=_init_row_worker, initargs=(seq, cfg)) as pool:
            rows = pool.map(_likelihood_row, jobs, chunksize=max(1, len(grid) // (8 * workers)))
    else:
        _init_row_worker(seq, cfg)
        rows = [_likelihood_row(job) for job in jobs]
    return np.array(rows)


@dataclass(frozen=True)
class MeasurementRecord:
    """Comb-index outcomes drawn at one true acceleration."""

    outcomes: np.ndarray  # basis indices into the comb, shape (N,)
    true_accel: float
    seed: int

    def __post_init__(self):
        if len(self.outcomes) < 1:
            raise ValueError("record must contain at least one measurement")


def grid_index(grid: np.ndarray, a: float) -> int:
    j = int(np.argmin(np.abs(grid - a)))
    spacing = grid[1] - grid[0]
    if abs(grid[j] - a) > 1e-9 * max(abs(a), spacing):
        raise ValueError(f"acceleration {a} is not on the grid")
    return j


def sample_measurements(
    table: np.ndarray,
    grid: np.ndarray,
    true_accel: float,
    n: int,
    seed: int,
) -> MeasurementRecord:
    """N i.i.d. categorical draws from the row at the (on-grid) true acceleration."""
    grid = _check_grid(grid)
    row = table[grid_index(grid, true_accel)]
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(len(row), size=n, p=row / row.sum())
    return MeasurementRecord(outcomes, true_accel, seed)


def uniform_prior(grid: np.ndarray) -> np.ndarray:
    grid = _check_grid(grid)
    return np.full(len(grid), 1.0 / len(grid))


def _normalize_log(logp: np.ndarray) -> np.ndarray:
    peak = np.max(logp)
    if not np.isfinite(peak):
        raise DegenerateEvidenceError("posterior mass underflowed to zero everywhere")
    logp = logp - peak
    return logp - np.log(np.sum(np.exp(logp)))


def bayes_posterior(
    table: np.ndarray,
    record: MeasurementRecord | np.ndarray,
    prior: np.ndarray | None = None,
) -> np.ndarray:
    """Sequential Bayes updates over the record, renormalized each step in log space."""
    outcomes = record.outcomes if isinstance(record, MeasurementRecord) else np.asarray(record)
    logp = np.log(prior) if prior is not None else np.full(table.shape[0], -np.log(table.shape[0]))
    with np.errstate(divide="ignore"):
        log_table = np.log(table)
    for p in outcomes:
        logp = _normalize_log(logp + log_table[:, p])
    return np.exp(_normalize_log(logp))


def posterior_from_counts(
    table: np.ndarray,
    counts: np.ndarray,
    prior: np.ndarray | None = None,
) -> np.ndarray:
    """Posterior from outcome counts; identical to sequential updates (the
    product of likelihood columns commutes)."""
    logp = np.log(prior) if prior is not None else np.full(table.shape[0], -np.log(table.shape[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = counts * np.log(table)
    terms = np.where(counts[np.newaxis, :] == 0, 0.0, terms)
    return np.exp(_normalize_log(logp + terms.sum(axis=1)))


def posterior_mean_std(posterior: np.ndarray, grid: np.ndarray) -> tuple[float, float]:
    grid = np.asarray(grid, dtype=float)
    mean = float(np.sum(posterior * grid))
    var = float(np.sum(posterior * (grid - mean) ** 2))
    return mean, math.sqrt(max(var, 0.0))


def fisher_information(table: np.ndarray, grid: np.ndarray, j: int) -> float:
    """Single-measurement Fisher information at interior grid index j.

    dP/da by central differences over neighbouring rows; outcomes with
    P < 1e-12 are skipped (they carry no usable information numerically).
    """
    grid = _check_grid(grid)
    if not 0 < j < len(grid) - 1:
        raise ValueError("Fisher information needs an interior grid index")
    spacing = grid[1] - grid[0]
    dp = (table[j + 1] - table[j - 1]) / (2.0 * spacing)
    p = table[j]
    keep = p >= 1e-12
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def cr_bound(fisher_info: float, n: int) -> float:
    """Cramer-Rao lower bound 1/sqrt(N * I1); infinite when I1 = 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if fisher_info < 0:
        raise ValueError("Fisher information cannot be negative")
    if fisher_info == 0.0:
        return math.inf
    return 1.0 / math.sqrt(n * fisher_info)


def bragg_baseline(accel: float, free_time: float) -> np.ndarray:
    """Two-port Mach-Zehnder with +-1 hbar kL arms: P(+-) = (1 +- cos(2 a T^2))/2."""
    if free_time <= 0:
        raise ValueError("free_time must be positive")
    phase = 2.0 * accel * free_time ** 2
    return np.array([(1.0 + np.cos(phase)) / 2.0, (1.0 - np.cos(phase)) / 2.0])


def bragg_likelihood(grid: np.ndarray, free_time: float) -> np.ndarray:
    grid = _check_grid(grid)
    return np.array([bragg_baseline(a, free_time) for a in grid])


def default_ladder(n_max: int, points_per_decade: int = 4) -> np.ndarray:
    """Logarithmic N ladder from 1 to n_max, unique integers."""
    if n_max < 100:
        raise ValueError("n_max must be at least 100")
    decades = math.log10(n_max)
    raw = np.logspace(0, decades, int(round(decades * points_per_decade)) + 1)
    return np.unique(np.round(raw).astype(int))


@dataclass(frozen=True)
class SigmaCurve:
    n_values: np.ndarray
    sigma_mean: np.ndarray
    sigma_sem: np.ndarray   # standard error over trials (0 for a single trial)
    cr: np.ndarray
    fisher_info: float


def sigma_vs_n_experiment(
    table: np.ndarray,
    grid: np.ndarray,
    true_accel: float,
    n_max: int = 10_000,
    trials: int = 8,
    seed: int = 0,
    ladder: np.ndarray | None = None,
) -> SigmaCurve:
    """Average posterior sigma over independent records, against the CR bound.

    Each trial draws one record of n_max samples; posteriors at the ladder
    checkpoints reuse the record prefixes via outcome counts.
    """
    grid = _check_grid(grid)
    ladder = default_ladder(n_max) if ladder is None else np.asarray(ladder, dtype=int)
    j = grid_index(grid, true_accel)
    info = fisher_information(table, grid, j)
    sigmas = np.zeros((trials, len(ladder)))
    base = np.random.default_rng(seed)
    for trial in range(trials):
        record = sample_measurements(table, grid, true_accel, int(ladder[-1]), int(base.integers(2**31)))
        for k, n in enumerate(ladder):
            counts = np.bincount(record.outcomes[:n], minlength=table.shape[1])
            post = posterior_from_counts(table, counts)
            sigmas[trial, k] = posterior_mean_std(post, grid)[1]
    cr = np.array([cr_bound(info, int(n)) for n in ladder])
    sem = sigmas.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(len(ladder))
    return SigmaCurve(ladder, sigmas.mean(axis=0), sem, cr, info)


def loglog_slope(n_values: np.ndarray, sigma: np.ndarray, n_min: float = 100.0) -> float:
    """Least-squares slope of log sigma vs log N for N >= n_min."""
    sel = np.asarray(n_values, dtype=float) >= n_min
    return float(np.polyfit(np.log(np.asarray(n_values, float)[sel]), np.log(sigma[sel]), 1)[0])

"""Isonormal Gaussian and Rademacher processes on a sampled class."""

import logging
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.classes.classdata import SampledClass, pairwise_distances
from src.config import DEFAULT_THREADS, DRAW_BLOCK

logger = logging.getLogger(__name__)

ProcessKind = Literal["gaussian", "rademacher"]

# cap on B * m * m entries materialized by the pair scan
PAIR_SCAN_BUDGET = 20_000_000


@dataclass(frozen=True)
class ProcessDraw:
    kind: str
    noise: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class ModulusCurve:
    """Monte Carlo estimates of delta -> E sup_{||f-g|| <= delta} |W(f) - W(g)|."""

    deltas: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    n_draws: int
    seed: int
    label: str = "class"
    per_draw: Optional[np.ndarray] = None
    failures: int = 0

    def index_of(self, delta: float) -> int:
        hits = np.nonzero(np.isclose(self.deltas, delta, rtol=1e-9, atol=1e-15))[0]
        if hits.size == 0:
            raise ValueError(f"Modulus curve '{self.label}' has no knot at delta={delta:.6g}")
        return int(hits[0])

    def at(self, delta: float) -> float:
        """Estimate at the largest knot <= delta (0 below the grid)."""
        below = np.nonzero(self.deltas <= delta * (1 + 1e-12))[0]
        if below.size == 0:
            return 0.0
        return float(self.estimates[below[-1]])

    def std_error_at(self, delta: float) -> float:
        below = np.nonzero(self.deltas <= delta * (1 + 1e-12))[0]
        if below.size == 0:
            return 0.0
        return float(self.std_errors[below[-1]])

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame({
            "delta": self.deltas,
            "estimate": self.estimates,
            "std_error": self.std_errors,
        })


def draw_rng(seed: int, k: int) -> np.random.Generator:
    """Generator for draw k; independent of how draws are batched."""
    return np.random.default_rng([int(seed), int(k)])


def draw_matrix(n: int, kind: ProcessKind, seed: int, start: int, stop: int) -> np.ndarray:
    """Noise vectors for draws start..stop-1, one row per draw."""
    rows = np.empty((stop - start, n))
    for row, k in enumerate(range(start, stop)):
        rng = draw_rng(seed, k)
        if kind == "gaussian":
            rows[row] = rng.standard_normal(n)
        elif kind == "rademacher":
            rows[row] = 2.0 * rng.integers(0, 2, size=n) - 1.0
        else:
            raise ValueError(f"Unknown process kind: {kind}")
    return rows


def process_scale(kind: ProcessKind, n: int) -> float:
    """W(f) = scale * <noise, f(x)>: 1/sqrt(n) for Gaussian, 1/n for Rademacher."""
    return 1.0 / np.sqrt(n) if kind == "gaussian" else 1.0 / n


def map_draw_blocks(block_fn: Callable[[int, int], np.ndarray], n_draws: int,
                    n_jobs: int = DEFAULT_THREADS, block: int = DRAW_BLOCK) -> np.ndarray:
    """Run ``block_fn(start, stop)`` over fixed draw blocks and stack in draw order."""
    if n_draws < 1:
        raise ValueError(f"Need at least one draw, got {n_draws}")
    bounds = [(s, min(s + block, n_draws)) for s in range(0, n_draws, block)]
    if n_jobs == 1 or len(bounds) == 1:
        parts = [block_fn(s, e) for s, e in bounds]
    else:
        parts = Parallel(n_jobs=n_jobs, backend="threading")(
            delayed(block_fn)(s, e) for s, e in bounds
        )
    return np.concatenate(parts, axis=0)


def mean_and_std_error(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    samples = np.asarray(samples, dtype=float)
    count = samples.shape[0]
    mean = samples.mean(axis=0)
    if count < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / np.sqrt(count)


def draw_process(F: SampledClass, kind: ProcessKind, seed: int) -> ProcessDraw:
    """One realization of the process on every row of F."""
    noise = draw_matrix(F.n, kind, seed, 0, 1)[0]
    values = process_scale(kind, F.n) * (F.values @ noise)
    return ProcessDraw(kind=kind, noise=noise, values=values)


def _pair_sup(W: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """max over admissible (i, j) of W_j - W_i, per row of W."""
    m = W.shape[1]
    step = max(1, PAIR_SCAN_BUDGET // max(1, m * m))
    out = np.empty(W.shape[0])
    for s in range(0, W.shape[0], step):
        chunk = W[s:s + step]
        diff = chunk[:, None, :] - chunk[:, :, None]
        out[s:s + step] = np.where(mask[None], diff, -np.inf).max(axis=(1, 2))
    return out


def modulus_finite(F: SampledClass, delta_grid: Sequence[float], n_draws: int, seed: int,
                   n_jobs: int = DEFAULT_THREADS, keep_draws: bool = False) -> ModulusCurve:
    """Monte Carlo estimate of omega(F, delta) on a grid of deltas.

    Args:
        F: Sampled class
        delta_grid: Nonnegative radii
        n_draws: Number of Gaussian draws
        seed: Base seed; draw k uses the generator seeded by (seed, k)
        n_jobs: Worker threads
        keep_draws: Keep the per-draw suprema in the returned curve

    Returns:
        ModulusCurve sorted by delta
    """
    deltas = np.sort(np.asarray(delta_grid, dtype=float).ravel())
    if deltas.size == 0 or np.any(deltas < 0):
        raise ValueError("Delta grid must be nonempty and nonnegative")
    dist = pairwise_distances(F)
    masks = [dist <= d for d in deltas]
    scale = process_scale("gaussian", F.n)

    def block(start: int, stop: int) -> np.ndarray:
        noise = draw_matrix(F.n, "gaussian", seed, start, stop)
        W = scale * noise @ F.values.T
        return np.stack([_pair_sup(W, mask) for mask in masks], axis=1)

    sups = map_draw_blocks(block, n_draws, n_jobs)
    est, se = mean_and_std_error(sups)
    logger.info(f"modulus_finite '{F.label}': {len(deltas)} deltas, {n_draws} draws, seed={seed}")
    return ModulusCurve(deltas=deltas, estimates=est, std_errors=se, n_draws=n_draws, seed=seed,
                        label=F.label, per_draw=sups if keep_draws else None)


def gaussian_sup_finite(F: SampledClass, n_draws: int, seed: int,
                        n_jobs: int = DEFAULT_THREADS) -> Tuple[float, float]:
    """E sup_f |W(f)| with its standard error."""
    scale = process_scale("gaussian", F.n)

    def block(start: int, stop: int) -> np.ndarray:
        noise = draw_matrix(F.n, "gaussian", seed, start, stop)
        return np.abs(scale * noise @ F.values.T).max(axis=1)

    est, se = mean_and_std_error(map_draw_blocks(block, n_draws, n_jobs))
    return float(est), float(se)


def empirical_covariance(F: SampledClass, n_draws: int, seed: int,
                         n_jobs: int = DEFAULT_THREADS) -> np.ndarray:
    """Sample second-moment matrix of (W(f_1), ..., W(f_m)); its mean is the Gram matrix."""
    scale = process_scale("gaussian", F.n)

    def block(start: int, stop: int) -> np.ndarray:
        noise = draw_matrix(F.n, "gaussian", seed, start, stop)
        return scale * noise @ F.values.T

    W = map_draw_blocks(block, n_draws, n_jobs)
    return W.T @ W / n_draws


def _require_range_checked(F: SampledClass) -> None:
    if not F.range_checked:
        raise ValueError(f"Class '{F.label}' must be range-checked for mean localization")


class FrozenRademacherOracle:
    """r -> E sup_{P_n f <= r} |R_n(f)| over a frozen set of sign draws.

    Freezing the draws makes the map deterministic and nondecreasing in r,
    which the fixed-point solvers rely on.
    """

    def __init__(self, F: SampledClass, n_draws: int, seed: int, n_jobs: int = DEFAULT_THREADS):
        _require_range_checked(F)
        self.label = F.label
        self.n_draws = n_draws
        self.seed = seed
        order = np.argsort(F.means, kind="stable")
        self._sorted_means = F.means[order]
        scale = process_scale("rademacher", F.n)
        values = F.values[order]

        def block(start: int, stop: int) -> np.ndarray:
            signs = draw_matrix(F.n, "rademacher", seed, start, stop)
            return np.maximum.accumulate(np.abs(scale * signs @ values.T), axis=1)

        self._prefix_max = map_draw_blocks(block, n_draws, n_jobs)
        self.last_std_error = 0.0

    def per_draw(self, r: float) -> np.ndarray:
        if r < 0:
            raise ValueError(f"Localization radius must be nonnegative, got {r}")
        k = int(np.searchsorted(self._sorted_means, r, side="right"))
        if k == 0:
            return np.zeros(self.n_draws)
        return self._prefix_max[:, k - 1]

    def __call__(self, r: float) -> float:
        est, se = mean_and_std_error(self.per_draw(r))
        self.last_std_error = float(se)
        return float(est)


def localized_rademacher_finite(F: SampledClass, r: float, n_draws: int, seed: int,
                                n_jobs: int = DEFAULT_THREADS) -> Tuple[float, float]:
    """E sup_{P_n f <= r} |R_n(f)| over the rows of a range-checked class.

    Returns:
        (estimate, std_error); an empty localization contributes 0
    """
    if r < 0:
        raise ValueError(f"Localization radius must be nonnegative, got {r}")
    oracle = FrozenRademacherOracle(F, n_draws, seed, n_jobs)
    est, se = mean_and_std_error(oracle.per_draw(r))
    return float(est), float(se)

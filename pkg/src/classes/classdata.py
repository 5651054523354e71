"""Sampled function classes and the empirical L2(P_n) geometry."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.config import GRAM_CLAMP, RANGE_TOL, WEIGHT_SUM_TOL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampledClass:
    """A finite function class restricted to an n-point sample.

    Row i of ``values`` holds f_i(x_1), ..., f_i(x_n). The Hilbert space is
    L2(P_n) with inner product <f, g> = (1/n) sum_k f(x_k) g(x_k).
    """

    values: np.ndarray
    label: str = "class"
    range_checked: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2:
            raise ValueError(f"Class values must be a 2-d array, got shape {values.shape}")
        m, n = values.shape
        if m < 1 or n < 1:
            raise ValueError(f"Class needs at least one function and one sample point, got {m}x{n}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"Class '{self.label}' contains non-finite entries")
        if self.range_checked:
            lo, hi = values.min(), values.max()
            if lo < -RANGE_TOL or hi > 1.0 + RANGE_TOL:
                raise ValueError(
                    f"Class '{self.label}' is range-checked but has entries in [{lo:.6g}, {hi:.6g}]"
                )
            values = np.clip(values, 0.0, 1.0)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def norms(self) -> np.ndarray:
        """Empirical L2 norms of the rows."""
        return np.sqrt(np.mean(self.values ** 2, axis=1))

    @property
    def means(self) -> np.ndarray:
        """P_n f_i for every row."""
        return np.mean(self.values, axis=1)

    @property
    def diameter(self) -> float:
        return float(pairwise_distances(self).max())

    def subset(self, indices: Sequence[int], label: Optional[str] = None) -> "SampledClass":
        idx = np.asarray(indices, dtype=int)
        return SampledClass(self.values[idx], label=label or f"{self.label}[{len(idx)}]",
                            range_checked=self.range_checked)

    def scaled(self, factor: float) -> "SampledClass":
        """Class multiplied by ``factor``; range checking is dropped."""
        return SampledClass(self.values * factor, label=f"{factor:g}*{self.label}")

    def distinct_count(self) -> int:
        """Number of rows distinct at resolution 0."""
        return int(np.unique(self.values, axis=0).shape[0])


@dataclass(frozen=True)
class ConvexCombination:
    """Weights of a point of conv(F)."""

    weights: np.ndarray = field()

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float, copy=True).ravel()
        if weights.size == 0:
            raise ValueError("Convex combination needs at least one weight")
        if np.any(weights < 0):
            raise ValueError(f"Convex weights must be nonnegative, min is {weights.min():.3g}")
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"Convex weights must sum to 1, got {total:.12g}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def vertex(cls, m: int, index: int) -> "ConvexCombination":
        weights = np.zeros(m)
        weights[index] = 1.0
        return cls(weights)

    @classmethod
    def from_unnormalized(cls, weights: np.ndarray) -> "ConvexCombination":
        """Clip solver noise and renormalize onto the simplex."""
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        if w.sum() <= 0:
            raise ValueError("Cannot normalize an all-zero weight vector")
        return cls(w / w.sum())


def empirical_gram(F: SampledClass) -> np.ndarray:
    """Gram matrix of the class in L2(P_n).

    Args:
        F: Sampled class

    Returns:
        m x m matrix with entry (i, j) = (1/n) sum_k f_i(x_k) f_j(x_k)
    """
    gram = F.values @ F.values.T / F.n
    return 0.5 * (gram + gram.T)


def squared_distances(gram: np.ndarray) -> np.ndarray:
    """Squared distances from a Gram matrix with PSD drift clamped.

    Cancellation error grows with the squared norms, so the clamp is
    relative to ||f_i||^2 + ||f_j||^2 (and absolute below norm 1).
    """
    diag = np.diag(gram)
    norms_sq = diag[:, None] + diag[None, :]
    sq = norms_sq - 2.0 * gram
    floor = GRAM_CLAMP * np.maximum(1.0, norms_sq)
    if np.any(sq < floor):
        i, j = np.unravel_index(np.argmin(sq - floor), sq.shape)
        # drift this large means the input is not a Gram matrix
        raise ValueError(f"Squared distance {sq[i, j]:.3g} below clamp {floor[i, j]:.3g}")
    sq = np.maximum(sq, 0.0)
    np.fill_diagonal(sq, 0.0)
    return sq


def pairwise_distances(F: SampledClass) -> np.ndarray:
    """Empirical L2 distances between all pairs of rows."""
    return np.sqrt(squared_distances(empirical_gram(F)))


def evaluate_combination(F: SampledClass, c: ConvexCombination) -> np.ndarray:
    """Evaluate a convex combination of the rows at the sample points.

    Args:
        F: Sampled class
        c: Convex weights, one per row

    Returns:
        Length-n array sum_i weights[i] * row_i
    """
    if c.weights.shape[0] != F.m:
        raise ValueError(f"Weight length {c.weights.shape[0]} does not match class size {F.m}")
    result = c.weights @ F.values
    if F.range_checked:
        result = np.clip(result, 0.0, 1.0)
    return result


def load_class_csv(path: Union[str, Path], assert_range_01: bool = False,
                   label: Optional[str] = None) -> SampledClass:
    """Load a class from CSV: one function per row, n columns, no header."""
    path = Path(path)
    try:
        values = np.loadtxt(path, delimiter=",", ndmin=2)
    except Exception as e:
        logger.error(f"Error loading class from {path}: {str(e)}")
        raise
    F = SampledClass(values, label=label or path.stem, range_checked=assert_range_01)
    logger.info(f"Loaded class '{F.label}' with m={F.m}, n={F.n} from {path}")
    return F


def load_vector_csv(path: Union[str, Path]) -> np.ndarray:
    """Load a target vector stored as a single CSV row or column."""
    values = np.loadtxt(Path(path), delimiter=",", ndmin=1)
    values = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(values)):
        raise ValueError(f"Target vector in {path} contains non-finite entries")
    return values


def save_class_csv(F: SampledClass, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, F.values, delimiter=",", fmt="%.17g")
    logger.info(f"Saved class '{F.label}' ({F.m}x{F.n}) to {path}")
    return path

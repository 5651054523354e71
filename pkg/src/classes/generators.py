"""Synthetic sampled classes with known complexity regimes."""

import logging
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.classes.classdata import ConvexCombination, SampledClass

logger = logging.getLogger(__name__)

GeneratorKind = Literal["singleton", "two_point", "segment", "ball",
                        "interval_indicators", "lattice_holder"]

LATTICE_STEP_CONSTANT = 0.5


class GeneratorSpec(BaseModel):
    """Parameters of a synthetic class; outputs are deterministic in (spec, seed)."""

    kind: GeneratorKind
    n: int = Field(100, ge=1)
    seed: int = 0
    m: int = Field(2, ge=1)
    d: int = Field(2, ge=1)
    V: float = Field(1.0, gt=0)
    levels: int = Field(64, ge=1)
    distance: float = Field(1.0, ge=0)
    range_checked: bool = True

    @model_validator(mode="after")
    def _check_feasible(self) -> "GeneratorSpec":
        if self.kind == "ball" and self.d > self.n:
            raise ValueError(f"ball needs d <= n, got d={self.d}, n={self.n}")
        if self.kind == "two_point" and self.range_checked and self.distance > 1:
            raise ValueError("two_point with distance > 1 cannot be range-checked")
        if self.kind == "lattice_holder" and self.levels < 4:
            raise ValueError(f"lattice_holder needs at least 4 levels, got {self.levels}")
        if self.kind in ("segment", "interval_indicators", "lattice_holder") and self.m < 2:
            raise ValueError(f"{self.kind} needs m >= 2")
        return self

    @property
    def label(self) -> str:
        if self.kind == "ball":
            return f"ball(d={self.d},m={self.m})"
        if self.kind == "lattice_holder":
            return f"lattice_holder(V={self.V:g},levels={self.levels},m={self.m})"
        if self.kind in ("segment", "interval_indicators"):
            return f"{self.kind}(m={self.m})"
        if self.kind == "two_point":
            return f"two_point(d={self.distance:g})"
        return self.kind


FunctionFamily = Callable[[np.ndarray], np.ndarray]


def _sample_points(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.sort(rng.uniform(0.0, 1.0, size=n))


def _constant_family(levels: np.ndarray) -> FunctionFamily:
    return lambda x: np.repeat(levels[:, None], len(x), axis=1)


def _ball_family(spec: GeneratorSpec, rng: np.random.Generator,
                 x_train: np.ndarray) -> FunctionFamily:
    """Unit ball of a d-dim subspace, orthonormal in L2(P_n) on the training points."""
    freqs = rng.permutation(np.arange(1, 4 * spec.d + 1))[:spec.d]
    phases = rng.uniform(0.0, 2 * np.pi, size=spec.d)

    def basis(x: np.ndarray) -> np.ndarray:
        return np.cos(np.pi * freqs[:, None] * x[None, :] + phases[:, None])

    raw = basis(x_train)
    # whiten so the rows are orthonormal under (1/n) sum_k
    gram = raw @ raw.T / len(x_train)
    chol = np.linalg.cholesky(gram + 1e-12 * np.eye(spec.d))
    whitening = np.linalg.inv(chol)

    directions = rng.standard_normal((spec.m, spec.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, size=spec.m) ** (1.0 / spec.d)
    coords = directions * radii[:, None]

    def family(x: np.ndarray) -> np.ndarray:
        return coords @ (whitening @ basis(x))

    if not spec.range_checked:
        return family
    peak = max(np.abs(family(x_train)).max(), 1e-12)
    scale = 0.5 / peak
    return lambda x: np.clip(0.5 + scale * family(x), 0.0, 1.0)


def _interval_family(spec: GeneratorSpec) -> FunctionFamily:
    thresholds = np.linspace(0.0, 1.0, spec.m)
    return lambda x: (x[None, :] <= thresholds[:, None]).astype(float)


def _lattice_family(spec: GeneratorSpec, rng: np.random.Generator) -> FunctionFamily:
    """Random reflected walks on a grid with increments bounded by c * h^(1/V)."""
    h = 1.0 / spec.levels
    step = LATTICE_STEP_CONSTANT * h ** (1.0 / spec.V)
    paths = np.empty((spec.m, spec.levels))
    paths[:, 0] = rng.uniform(0.0, 1.0, size=spec.m)
    increments = rng.uniform(-step, step, size=(spec.m, spec.levels - 1))
    for j in range(1, spec.levels):
        nxt = paths[:, j - 1] + increments[:, j - 1]
        nxt = np.where(nxt < 0.0, -nxt, nxt)
        nxt = np.where(nxt > 1.0, 2.0 - nxt, nxt)
        paths[:, j] = nxt

    def family(x: np.ndarray) -> np.ndarray:
        cells = np.minimum((x * spec.levels).astype(int), spec.levels - 1)
        return paths[:, cells]

    return family


def function_family(spec: GeneratorSpec) -> Tuple[FunctionFamily, np.ndarray]:
    """Build the class as functions of x together with its training sample.

    Returns:
        (family, x_train) where family(x) is an m x len(x) array
    """
    rng = np.random.default_rng(spec.seed)
    x_train = _sample_points(rng, spec.n)
    if spec.kind == "singleton":
        family = _constant_family(np.array([0.5]))
    elif spec.kind == "two_point":
        family = _constant_family(np.array([0.0, spec.distance]))
    elif spec.kind == "segment":
        family = _constant_family(np.linspace(0.0, 1.0, spec.m))
    elif spec.kind == "ball":
        family = _ball_family(spec, rng, x_train)
    elif spec.kind == "interval_indicators":
        family = _interval_family(spec)
    elif spec.kind == "lattice_holder":
        family = _lattice_family(spec, rng)
    else:
        raise ValueError(f"Unknown generator kind: {spec.kind}")
    return family, x_train


def generate(spec: GeneratorSpec) -> SampledClass:
    """Generate the sampled class described by ``spec``."""
    family, x_train = function_family(spec)
    F = SampledClass(family(x_train), label=spec.label, range_checked=spec.range_checked)
    logger.info(f"Generated {F.label} with m={F.m}, n={F.n}, seed={spec.seed}")
    return F


def sample_class_pair(spec: GeneratorSpec, n_holdout: int,
                      holdout_seed: Optional[int] = None) -> Tuple[SampledClass, SampledClass]:
    """The same functions on the training sample and on a fresh holdout sample."""
    family, x_train = function_family(spec)
    rng = np.random.default_rng([spec.seed, 1 if holdout_seed is None else holdout_seed, 17])
    x_hold = _sample_points(rng, n_holdout)
    train = SampledClass(family(x_train), label=spec.label, range_checked=spec.range_checked)
    hold = SampledClass(family(x_hold), label=f"{spec.label}@holdout",
                        range_checked=spec.range_checked)
    return train, hold


def random_convex_combination(m: int, seed: int, support: Optional[int] = None) -> ConvexCombination:
    """Dirichlet(1, ..., 1) weights, optionally on a random support of given size."""
    rng = np.random.default_rng(seed)
    weights = np.zeros(m)
    k = m if support is None else max(1, min(support, m))
    idx = rng.choice(m, size=k, replace=False)
    weights[idx] = rng.dirichlet(np.ones(k))
    return ConvexCombination.from_unnormalized(weights)

"""Greedy epsilon-nets, covering curves and local entropies."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from src.classes.classdata import SampledClass, pairwise_distances

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpsNet:
    """Greedy net: a closed radius-cover that is also radius-separated."""

    radius: float
    center_indices: List[int]
    assignment: np.ndarray

    @property
    def size(self) -> int:
        return len(self.center_indices)


@dataclass(frozen=True)
class CoveringCurve:
    """Covering-number upper bounds along a decreasing epsilon grid."""

    epsilons: np.ndarray
    sizes: np.ndarray
    entropies: np.ndarray
    raw_sizes: np.ndarray
    label: str = "class"

    def size_at(self, eps: float) -> int:
        """Covering size at the largest knot <= eps (smallest knot if none)."""
        below = np.nonzero(self.epsilons <= eps + 1e-15)[0]
        idx = below[0] if below.size else len(self.epsilons) - 1
        return int(self.sizes[idx])

    def resolved_mask(self) -> np.ndarray:
        """Knots where the curve is neither 1 nor saturated at its maximum."""
        return (self.sizes > 1) & (self.sizes < self.sizes.max())

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame({
            "epsilon": self.epsilons,
            "size": self.sizes,
            "entropy": self.entropies,
        })


def _distance_matrix(F: SampledClass, distances: Optional[np.ndarray]) -> np.ndarray:
    # same Gram path as the modulus masks so nets and moduli agree at boundaries
    if distances is None:
        return pairwise_distances(F)
    if distances.shape != (F.m, F.m):
        raise ValueError(f"Distance matrix shape {distances.shape} does not match m={F.m}")
    return distances


def _lexicographic_first(values: np.ndarray) -> int:
    # lexsort is stable, so equal rows resolve to the lowest index
    return int(np.lexsort(values.T[::-1])[0])


def greedy_net(F: SampledClass, eps: float, distances: Optional[np.ndarray] = None) -> EpsNet:
    """Farthest-first traversal stopped at radius eps.

    Args:
        F: Sampled class
        eps: Net radius, must be positive
        distances: Precomputed pairwise_distances(F), reused across radii

    Returns:
        EpsNet whose centers cover F within eps and are pairwise more than eps apart
    """
    if not eps > 0:
        raise ValueError(f"Net radius must be positive, got {eps}")
    dist = _distance_matrix(F, distances)
    first = _lexicographic_first(F.values)
    centers = [first]
    min_dist = dist[first].copy()
    assignment = np.full(F.m, first, dtype=int)

    while True:
        candidate = int(np.argmax(min_dist))
        if min_dist[candidate] <= eps:
            break
        centers.append(candidate)
        row = dist[candidate]
        closer = row < min_dist
        assignment[closer] = candidate
        min_dist = np.where(closer, row, min_dist)

    logger.debug(f"greedy_net on '{F.label}' at eps={eps:.4g}: {len(centers)} centers")
    return EpsNet(radius=float(eps), center_indices=centers, assignment=assignment)


def check_net(F: SampledClass, net: EpsNet, distances: Optional[np.ndarray] = None) -> None:
    """Raise AssertionError unless the cover and separation properties hold."""
    dist = _distance_matrix(F, distances)
    for i in range(F.m):
        center = int(net.assignment[i])
        if center not in net.center_indices:
            raise AssertionError(f"Row {i} assigned to non-center {center}")
        d = dist[i, center]
        if d > net.radius:
            raise AssertionError(f"Row {i} at distance {d:.6g} > radius {net.radius:.6g}")
    for pos, c in enumerate(net.center_indices):
        others = net.center_indices[pos + 1:]
        if not others:
            continue
        d = dist[c, others]
        if np.any(d <= net.radius):
            raise AssertionError(f"Center {c} within radius {net.radius:.6g} of another center")


def separated_subset(F: SampledClass, eps: float) -> SampledClass:
    """The greedy maximal eps-separated subset F^eps as a class."""
    net = greedy_net(F, eps)
    return F.subset(net.center_indices, label=f"{F.label}^{eps:.4g}")


def covering_curve(F: SampledClass, eps_grid: Sequence[float]) -> CoveringCurve:
    """Covering numbers along a strictly decreasing grid.

    Raw greedy sizes are replaced by their running maximum as epsilon
    decreases so the curve is monotone; the envelope stays an upper bound.
    """
    grid = np.asarray(eps_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("Covering curve needs a nonempty epsilon grid")
    if np.any(grid <= 0):
        raise ValueError("Epsilon grid must be positive")
    if np.any(np.diff(grid) >= 0):
        raise ValueError("Epsilon grid must be strictly decreasing")

    dist = pairwise_distances(F)
    raw = np.array([greedy_net(F, eps, dist).size for eps in grid], dtype=int)
    sizes = np.maximum.accumulate(raw)
    if np.any(sizes != raw):
        logger.debug(f"Envelope adjusted {int(np.sum(sizes != raw))} knots for '{F.label}'")
    return CoveringCurve(epsilons=grid, sizes=sizes, entropies=np.log(sizes),
                         raw_sizes=raw, label=F.label)


def local_entropy(F: SampledClass, delta: float, eps: float, n_jobs: int = 1) -> float:
    """H(F, delta, eps) = max over f of H(B(f, delta) ∩ F, eps)."""
    if not delta > 0:
        raise ValueError(f"Ball radius must be positive, got {delta}")
    if not eps > 0:
        raise ValueError(f"Net radius must be positive, got {eps}")

    dist = pairwise_distances(F)
    balls = []
    seen = set()
    for i in range(F.m):
        members = np.nonzero(dist[i] <= delta)[0]
        key = members.tobytes()
        if key not in seen:
            seen.add(key)
            balls.append(members)

    def ball_size(members: np.ndarray) -> int:
        if members.size == 1:
            return 1
        return greedy_net(F.subset(members), eps, dist[np.ix_(members, members)]).size

    sizes = Parallel(n_jobs=n_jobs, backend="threading")(delayed(ball_size)(b) for b in balls)
    return float(np.log(max(sizes)))


def geometric_grid(start: float, stop: float, count: int) -> np.ndarray:
    if start <= 0 or stop <= 0 or count < 1:
        raise ValueError(f"Invalid geometric grid {start}:{stop}:{count}")
    return np.geomspace(start, stop, count)


def dyadic_grid(k_min: int, k_max: int) -> np.ndarray:
    """2^{-k} for k = k_min..k_max (decreasing)."""
    if k_max < k_min:
        raise ValueError(f"Invalid dyadic range {k_min}..{k_max}")
    return 2.0 ** -np.arange(k_min, k_max + 1, dtype=float)


def parse_grid(spec: Union[str, Sequence[float]]) -> np.ndarray:
    """Parse 'geometric:start:stop:count', 'linear:start:stop:count',
    'dyadic:kmin:kmax' or a comma separated list."""
    if not isinstance(spec, str):
        return np.asarray(spec, dtype=float).ravel()
    parts = spec.split(":")
    kind = parts[0].strip().lower()
    try:
        if kind == "geometric":
            return geometric_grid(float(parts[1]), float(parts[2]), int(parts[3]))
        if kind == "linear":
            return np.linspace(float(parts[1]), float(parts[2]), int(parts[3]))
        if kind == "dyadic":
            return dyadic_grid(int(parts[1]), int(parts[2]))
        return np.array([float(v) for v in spec.split(",") if v.strip()], dtype=float)
    except (IndexError, ValueError) as e:
        raise ValueError(f"Cannot parse grid '{spec}': {str(e)}") from e

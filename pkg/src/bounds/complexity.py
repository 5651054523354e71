"""Bound functionals built from moduli and covering curves."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Mapping, Sequence, Tuple, Union

import numpy as np

from src.classes.classdata import SampledClass
from src.classes.nets import CoveringCurve, separated_subset
from src.config import DEFAULT_THREADS
from src.processes.process import ModulusCurve, modulus_finite

logger = logging.getLogger(__name__)

RateKind = Literal["ex1_poly_covering", "ex2_smallV", "ex2_Veq2", "ex2_bigV",
                   "hullentropy_ex1", "hullentropy_ex2"]

DEFAULT_X_MAX = float(np.exp(-1.0))


@dataclass(frozen=True)
class RateCurve:
    """Closed-form reference rates for polynomial covering and entropy growth.

    ex1_poly_covering is K x^{2/(2+V)} log^{V/(2+V)}(1/x); the ex2 kinds are
    the moduli for entropy exponent V below, at and above 2; the
    hullentropy kinds are the matching entropy bounds for conv(F).
    """

    kind: RateKind
    V: float = 2.0
    K: float = 1.0
    x_max: float = DEFAULT_X_MAX

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError(f"Rate constant must be positive, got {self.K}")
        if not self.V > 0:
            raise ValueError(f"Exponent V must be positive, got {self.V}")
        if not 0 < self.x_max < 1:
            raise ValueError(f"x_max must lie in (0, 1), got {self.x_max}")
        if self.kind == "ex2_smallV" and not self.V < 2:
            raise ValueError(f"ex2_smallV needs V < 2, got {self.V}")
        if self.kind == "ex2_bigV" and not self.V > 2:
            raise ValueError(f"ex2_bigV needs V > 2, got {self.V}")

    @property
    def label(self) -> str:
        return f"{self.kind}(V={self.V:g},K={self.K:g})"


def _rate_formula(rc: RateCurve, x: np.ndarray) -> np.ndarray:
    V = rc.V
    log_inv = np.log(1.0 / x)
    if rc.kind == "ex1_poly_covering":
        out = x ** (2.0 / (2.0 + V)) * log_inv ** (V / (2.0 + V))
    elif rc.kind == "ex2_smallV":
        out = log_inv ** (0.5 - 1.0 / V)
    elif rc.kind == "ex2_Veq2":
        out = log_inv
    elif rc.kind == "ex2_bigV":
        out = x ** (1.0 - V / 2.0)
    elif rc.kind == "hullentropy_ex1":
        p = 2.0 * V / (2.0 + V)
        out = x ** (-p) * log_inv ** p
    elif rc.kind == "hullentropy_ex2":
        if V < 2:
            out = x ** -2.0 * log_inv ** (1.0 - V / 2.0)
        elif V == 2:
            out = x ** -2.0 * log_inv ** 2
        else:
            out = x ** -V
    else:
        raise ValueError(f"Unknown rate kind: {rc.kind}")
    return rc.K * out


def rate_reference(rc: RateCurve, x: float) -> float:
    """Evaluate the reference curve at x in (0, x_max]."""
    if not 0 < x <= rc.x_max:
        raise ValueError(f"{rc.label} is defined on (0, {rc.x_max:.4g}], got x={x}")
    return float(_rate_formula(rc, np.asarray(x, dtype=float)))


def rate_modulus_curve(rc: RateCurve, deltas: Sequence[float]) -> ModulusCurve:
    """Sample a reference rate into a ModulusCurve; zero where log(1/x) <= 0."""
    deltas = np.sort(np.asarray(deltas, dtype=float).ravel())
    values = np.zeros_like(deltas)
    live = (deltas > 0) & (deltas < 1)
    values[live] = _rate_formula(rc, deltas[live])
    return ModulusCurve(deltas=deltas, estimates=values, std_errors=np.zeros_like(values),
                        n_draws=0, seed=0, label=rc.label)


def theorem1_bound(mod_F: ModulusCurve, cov_F: CoveringCurve, delta: float) -> Tuple[float, float]:
    """min over epsilon of 2 omega(F, eps) + delta sqrt(N(F, eps)).

    Candidates are the positive modulus knots. The covering size is read at the
    largest covering knot <= eps, which never undercounts; knots below the
    covering grid are skipped.

    Returns:
        (bound, minimizing epsilon)
    """
    if delta < 0:
        raise ValueError(f"Radius must be nonnegative, got {delta}")
    smallest_cover = float(cov_F.epsilons.min())
    best, best_eps = np.inf, np.nan
    for eps, omega in zip(mod_F.deltas, mod_F.estimates):
        if eps <= 0 or eps < smallest_cover * (1 - 1e-12):
            continue
        value = 2.0 * omega + delta * np.sqrt(cov_F.size_at(eps))
        if value < best:
            best, best_eps = float(value), float(eps)
    if not np.isfinite(best):
        raise ValueError("Theorem 1 bound needs at least one epsilon shared by both curves")
    return best, best_eps


def theorem1_curve(mod_F: ModulusCurve, cov_F: CoveringCurve,
                   deltas: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bound, minimizer and MC standard error of the bound along a delta grid."""
    bounds, argmins, errors = [], [], []
    for delta in deltas:
        value, eps = theorem1_bound(mod_F, cov_F, delta)
        bounds.append(value)
        argmins.append(eps)
        errors.append(2.0 * mod_F.std_errors[mod_F.index_of(eps)])
    return np.array(bounds), np.array(argmins), np.array(errors)


def dudley_integral(cov: CoveringCurve, lower: float, upper: float) -> float:
    """Integral of H^{1/2}(u) over [lower, upper] for the step entropy of ``cov``.

    On (eps_{i+1}, eps_i] the entropy is taken at the smaller knot eps_{i+1};
    below the smallest knot it is held constant.
    """
    if lower < 0:
        raise ValueError(f"Lower limit must be nonnegative, got {lower}")
    if lower > upper:
        raise ValueError(f"Lower limit {lower} exceeds upper limit {upper}")
    if lower == upper:
        return 0.0
    knots = np.sort(cov.epsilons)
    roots = np.sqrt(cov.entropies[np.argsort(cov.epsilons)])
    if upper > knots[-1] * (1 + 1e-12):
        raise ValueError(f"Covering grid of '{cov.label}' stops at {knots[-1]:.4g} < upper={upper:.4g}")
    if lower < knots[0]:
        logger.debug(f"Entropy of '{cov.label}' held constant below eps={knots[0]:.4g}")
    edges = np.concatenate([[0.0], knots])
    # (0, k_0] and (k_0, k_1] both use k_0; (k_j, k_{j+1}] uses k_j
    heights = np.concatenate([[roots[0]], roots[:-1]])
    left = np.clip(edges[:-1], lower, upper)
    right = np.clip(edges[1:], lower, upper)
    return float(np.sum(heights * (right - left)))


def truncated_dudley_bound(cov_sep: CoveringCurve, delta: float, eps: float) -> float:
    """Integral of H^{1/2}(F^delta, u) from delta to eps for a separated subset."""
    if eps <= delta:
        return 0.0
    return dudley_integral(cov_sep, delta, eps)


def sudakov_ratio(cov: CoveringCurve, sup_estimate: float) -> float:
    """max over the grid of eps * H^{1/2}(eps), divided by E sup |W(f)|."""
    if not sup_estimate > 0:
        raise ValueError(f"Sudakov denominator must be positive, got {sup_estimate}")
    numerator = float(np.max(cov.epsilons * np.sqrt(cov.entropies)))
    return numerator / sup_estimate


def chaining_terms(mod: Union[ModulusCurve, Mapping[int, ModulusCurve]], k: int,
                   variant: Literal["lif", "lif2"] = "lif") -> List[float]:
    """Dyadic terms of the chaining sums bounding H^{1/2}(F, 2^{-k}).

    lif: term i is 2^i omega(F, 2^{1-i}).
    lif2: ``mod`` maps level i to the modulus of F^{2^{-i-1}}; term i is
    2^i omega(F^{2^{-i-1}}, 2^{2-i}).
    """
    if k < 0:
        raise ValueError(f"Chaining depth must be nonnegative, got {k}")
    terms = []
    for i in range(k + 1):
        if variant == "lif":
            if not isinstance(mod, ModulusCurve):
                raise ValueError("lif needs a single modulus curve")
            curve, knot = mod, 2.0 ** (1 - i)
        elif variant == "lif2":
            if isinstance(mod, ModulusCurve) or i not in mod:
                raise ValueError(f"lif2 needs the separated-subset modulus for level {i}")
            curve, knot = mod[i], 2.0 ** (2 - i)
        else:
            raise ValueError(f"Unknown chaining variant: {variant}")
        terms.append(2.0 ** i * float(curve.estimates[curve.index_of(knot)]))
    return terms


def entropy_from_modulus(mod: Union[ModulusCurve, Mapping[int, ModulusCurve]], k: int,
                         variant: Literal["lif", "lif2"] = "lif") -> float:
    """Chaining sum without its constant; the caller scales by the profile."""
    return float(sum(chaining_terms(mod, k, variant)))


def unit_diameter(F: SampledClass) -> SampledClass:
    """Rescale F to diameter 1 (a singleton is returned as is)."""
    diam = F.diameter
    if diam <= 0:
        return F
    return F.scaled(1.0 / diam)


def separated_moduli(F: SampledClass, k: int, n_draws: int, seed: int,
                     n_jobs: int = DEFAULT_THREADS) -> Dict[int, ModulusCurve]:
    """Per-level moduli omega(F^{2^{-i-1}}, 2^{2-i}) for i = 0..k.

    Each level uses its own greedy separated subset and an independent
    estimate seeded with seed + i.
    """
    moduli = {}
    for i in range(k + 1):
        subset = separated_subset(F, 2.0 ** (-i - 1))
        moduli[i] = modulus_finite(subset, [2.0 ** (2 - i)], n_draws, seed + i, n_jobs=n_jobs)
        logger.debug(f"Level {i}: |F^{2.0 ** (-i - 1):g}| = {subset.m}")
    return moduli

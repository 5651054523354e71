"""Concave complexity majorants psi_n and the fixed-point equations built on them."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Sequence

import numpy as np

from src.bounds.complexity import dudley_integral
from src.bounds.profile import ConstantsProfile
from src.classes.nets import CoveringCurve
from src.config import (FP_MAX_ITER, FP_PROBE_MARGIN, FP_PROBE_POINTS, NESTING_DEPTH, TOL_FP,
                        TOL_FP_MC)
from src.processes.process import ModulusCurve

logger = logging.getLogger(__name__)

Equation = Literal["Uo", "U", "r", "Uent", "rent"]
Oracle = Callable[[float], float]

SHAPE_TOL = 1e-10
MAX_DOUBLINGS = 60


class FixedPointError(RuntimeError):
    """A fixed-point iteration failed its precondition or did not converge."""

    def __init__(self, message: str, trace: Optional[List[float]] = None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class FixedPointResult:
    value: float
    equation: str
    iterations: int
    residual: float
    trace: List[float] = field(default_factory=list)
    components: Dict[str, float] = field(default_factory=dict)


def l_of_delta(delta: float) -> float:
    """l(delta) = 2 log(pi / sqrt(3) * log_2(2 / delta)) for delta in (0, 1]."""
    if not 0 < delta <= 1:
        raise ValueError(f"l(delta) needs delta in (0, 1], got {delta}")
    return float(2.0 * np.log(np.pi / np.sqrt(3.0) * np.log2(2.0 / delta)))


def r_zero(t: float, n: int) -> float:
    """(t + log log n) / n."""
    if n < 3:
        raise ValueError(f"log log n needs n >= 3, got {n}")
    if not t > 0:
        raise ValueError(f"Confidence parameter t must be positive, got {t}")
    return float((t + np.log(np.log(n))) / n)


@dataclass(frozen=True)
class PsiFunction:
    """Piecewise-linear concave nondecreasing function with psi(0) = 0.

    Beyond the grid the last slope is continued, which keeps concavity.
    """

    grid: np.ndarray
    values: np.ndarray
    method: Literal["theorem1", "entropy_integral", "direct_mc"]
    n: int

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if grid.shape != values.shape or grid.size < 2:
            raise ValueError("Psi grid and values must have the same length >= 2")
        if grid[0] != 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("Psi grid must start at 0 and increase strictly")
        scale = max(1.0, float(np.abs(values).max()))
        if abs(values[0]) > SHAPE_TOL * scale:
            raise ValueError(f"psi(0) must be 0, got {values[0]:.3g}")
        if np.any(np.diff(values) < -SHAPE_TOL * scale):
            raise ValueError("psi must be nondecreasing")
        slopes = np.diff(values) / np.diff(grid)
        if np.any(np.diff(slopes) > SHAPE_TOL * scale / max(float(np.diff(grid).min()), 1e-300)):
            raise ValueError("psi must be concave on its grid")
        values = values.copy()
        values[0] = 0.0
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def last_slope(self) -> float:
        return float((self.values[-1] - self.values[-2]) / (self.grid[-1] - self.grid[-2]))

    def __call__(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"psi is defined for x >= 0, got {x}")
        if x <= self.grid[-1]:
            return float(np.interp(x, self.grid, self.values))
        return float(self.values[-1] + self.last_slope * (x - self.grid[-1]))


def psi_theorem1(mod_G: ModulusCurve, cov_G: CoveringCurve, n: int, delta: float,
                 distinct: Optional[int] = None) -> float:
    """sqrt(pi / 2n) * min over eps of (omega(G, eps) + delta sqrt(N(G, eps))).

    The eps = 0 candidate (omega = 0, N = number of distinct rows) is always
    included when ``distinct`` is given, so psi(0) = 0.
    """
    if delta < 0:
        raise ValueError(f"psi needs delta >= 0, got {delta}")
    smallest_cover = float(cov_G.epsilons.min())
    candidates = [delta * np.sqrt(distinct)] if distinct is not None else []
    for eps, omega in zip(mod_G.deltas, mod_G.estimates):
        if eps <= 0 or eps < smallest_cover * (1 - 1e-12):
            continue
        candidates.append(omega + delta * np.sqrt(cov_G.size_at(eps)))
    if not candidates:
        raise ValueError("psi_theorem1 needs at least one epsilon shared by both curves")
    return float(np.sqrt(np.pi / (2.0 * n)) * min(candidates))


def build_psi_theorem1(mod_G: ModulusCurve, cov_G: CoveringCurve, n: int,
                       grid: Sequence[float], distinct: int) -> PsiFunction:
    grid = np.unique(np.concatenate([[0.0], np.asarray(grid, dtype=float)]))
    values = [psi_theorem1(mod_G, cov_G, n, x, distinct) for x in grid]
    return PsiFunction(grid=grid, values=np.array(values), method="theorem1", n=n)


def psi_entropy(cov: CoveringCurve, n: int, delta: float) -> float:
    """(4 sqrt(3) / sqrt(n)) * integral of H^{1/2} from 0 to sqrt(delta) / 2."""
    if delta < 0:
        raise ValueError(f"psi needs delta >= 0, got {delta}")
    return float(4.0 * np.sqrt(3.0) / np.sqrt(n) * dudley_integral(cov, 0.0, np.sqrt(delta) / 2.0))


def build_psi_entropy(cov: CoveringCurve, n: int, grid: Sequence[float]) -> PsiFunction:
    """psi as a function of the norm radius x, i.e. x -> psi_entropy(x^2).

    Grid points beyond twice the largest covering knot are dropped; the
    function continues linearly there.
    """
    top = 2.0 * float(cov.epsilons.max())
    grid = np.unique(np.concatenate([[0.0], np.asarray(grid, dtype=float)]))
    grid = grid[grid <= top]
    if grid.size < 2:
        grid = np.array([0.0, top])
    values = [psi_entropy(cov, n, x * x) for x in grid]
    return PsiFunction(grid=grid, values=np.array(values), method="entropy_integral", n=n)


def _upper_concave_envelope(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least concave majorant of points sorted by x, evaluated at x."""
    hull: List[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below the chord from a to i
            if (y[b] - y[a]) * (x[i] - x[a]) <= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.interp(x, x[hull], y[hull])


def build_psi_direct(oracle: Oracle, grid: Sequence[float], n: int) -> PsiFunction:
    """Least concave nondecreasing majorant of x -> oracle(x^2) on the grid."""
    grid = np.unique(np.concatenate([[0.0], np.asarray(grid, dtype=float)]))
    raw = np.array([oracle(x * x) for x in grid])
    raw = np.maximum.accumulate(np.maximum(raw, 0.0))
    raw[0] = 0.0
    return PsiFunction(grid=grid, values=_upper_concave_envelope(grid, raw),
                       method="direct_mc", n=n)


def _iterate(rhs: Oracle, start: float, tol_fp: float, max_iter: int,
             trace: List[float]) -> float:
    r = start
    warned = False
    for _ in range(max_iter):
        nxt = float(rhs(r))
        trace.append(nxt)
        if nxt > r + tol_fp and not warned:
            logger.warning(f"Fixed-point iterates increased from {r:.6g} to {nxt:.6g}")
            warned = True
        if abs(nxt - r) <= 0.01 * tol_fp:
            return nxt
        r = nxt
    raise FixedPointError(f"No convergence after {max_iter} iterations", trace)


def largest_fixed_point(rhs: Oracle, r_max: float, tol_fp: float = TOL_FP,
                        equation: str = "Uo", max_iter: int = FP_MAX_ITER) -> FixedPointResult:
    """Largest r in [0, r_max] with r = rhs(r), by downward iteration from r_max.

    Args:
        rhs: Nondecreasing map of [0, r_max] into itself
        r_max: Starting point; must satisfy rhs(r_max) <= r_max
        tol_fp: Residual tolerance |r - rhs(r)|
        equation: Tag stored in the result
        max_iter: Iteration guard

    Returns:
        FixedPointResult with the full trace of iterates
    """
    if not r_max > 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    top = float(rhs(r_max))
    if top > r_max + tol_fp:
        raise FixedPointError(f"rhs(r_max) = {top:.6g} exceeds r_max = {r_max:.6g}", [r_max, top])

    trace = [float(r_max)]
    value = _iterate(rhs, r_max, tol_fp, max_iter, trace)
    # a larger solution would show up as rhs(p) >= p above the value
    for _ in range(FP_PROBE_POINTS):
        lo = max(value * (1.0 + FP_PROBE_MARGIN), value + 100.0 * tol_fp)
        if lo >= r_max:
            break
        probes = np.geomspace(lo, r_max, FP_PROBE_POINTS)
        failing = [p for p in probes if rhs(p) >= p - 0.01 * tol_fp]
        if not failing:
            break
        restart = float(failing[-1])
        logger.warning(f"Probe at {restart:.6g} above {value:.6g}; restarting {equation}")
        value = max(value, _iterate(rhs, restart, tol_fp, max_iter, trace))
        if value < restart:
            break

    residual = abs(value - float(rhs(value)))
    if residual > tol_fp:
        raise FixedPointError(f"Residual {residual:.3g} exceeds {tol_fp:.3g}", trace)
    logger.debug(f"{equation}: r={value:.10g} after {len(trace) - 1} iterations")
    return FixedPointResult(value=float(value), equation=equation, iterations=len(trace) - 1,
                            residual=residual, trace=trace)


def _oracle_tolerance(oracle: Oracle) -> float:
    """Frozen Monte Carlo oracles carry their draw count; exact ones do not."""
    return TOL_FP_MC if getattr(oracle, "n_draws", None) else TOL_FP


def _smallest_dominating(a: float, b: float) -> float:
    """Smallest x >= 0 with b + a sqrt(x) <= x."""
    return float((a / 2.0 + np.sqrt(a * a / 4.0 + b)) ** 2)


def _find_r_max(rhs: Oracle, start: float) -> float:
    r = max(start, 1.0)
    for _ in range(MAX_DOUBLINGS):
        if rhs(r) <= r:
            return r
        r *= 2.0
    raise FixedPointError(f"No r_max with rhs(r_max) <= r_max below {r:.3g}")


def _check_args(delta: float, t: float, n: int) -> None:
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if not t > 0:
        raise ValueError(f"Confidence parameter t must be positive, got {t}")
    if n < 1:
        raise ValueError(f"Sample size must be positive, got {n}")


def solve_zero_error(psi: PsiFunction, tol_fp: float = TOL_FP) -> FixedPointResult:
    """r_hat: the largest solution of r = psi(sqrt(r))."""
    r_max = max(1.0, psi(1.0) ** 2 + 1.0)
    result = largest_fixed_point(lambda r: psi(np.sqrt(max(r, 0.0))), r_max, tol_fp, "Uo")
    logger.info(f"r_hat ({psi.method}, n={psi.n}) = {result.value:.6g}")
    return result


def _u_terms(delta: float, t: float, n: int) -> Dict[str, float]:
    """Deviation terms of the U equation; l is evaluated at min(delta, 1)."""
    L = t + l_of_delta(min(delta, 1.0))
    return {"delta": delta, "variance": float(np.sqrt(2.0 * delta * L / n)),
            "tail": 10.0 * L / (3.0 * n)}


def _solve_U_any(delta: float, t: float, n: int, oracle: Oracle, tol_fp: float,
                 depth: int = 1) -> FixedPointResult:
    if depth > NESTING_DEPTH:
        raise FixedPointError(f"Nesting depth {depth} exceeds {NESTING_DEPTH}")
    terms = _u_terms(delta, t, n)
    base = terms["delta"] + terms["variance"] + terms["tail"]

    def rhs(u: float) -> float:
        return base + 8.0 * oracle(u)

    result = largest_fixed_point(rhs, base + 8.0 + 1.0, tol_fp, "U")
    components = dict(terms, rademacher=8.0 * oracle(result.value))
    return FixedPointResult(result.value, "U", result.iterations, result.residual,
                            result.trace, components)


def solve_U(delta: float, t: float, n: int, oracle: Oracle,
            tol_fp: Optional[float] = None) -> FixedPointResult:
    """U(delta) = delta + 8 E sup_{P_n f <= U} |R_n f| + sqrt(2 delta (t+l)/n) + 10 (t+l) / 3n.

    Args:
        delta: Radius in (0, 1]
        t: Confidence parameter
        n: Sample size
        oracle: Nondecreasing map r -> localized Rademacher complexity, bounded by 1
        tol_fp: Defaults to the tolerance matching the oracle kind

    Returns:
        FixedPointResult tagged U with its term decomposition
    """
    _check_args(delta, t, n)
    return _solve_U_any(delta, t, n, oracle, tol_fp or _oracle_tolerance(oracle))


def solve_r(delta: float, t: float, n: int, oracle: Oracle,
            tol_fp: Optional[float] = None) -> FixedPointResult:
    """r(delta) = delta + 8 E sup_{P_n f <= U(2r)} |R_n f| + sqrt(4r(t+l(2r))/n) + 10(t+l(2r))/3n.

    U(2r) comes from an inner solve memoized on 2r; l is evaluated at
    min(2r, 1) so the equation stays defined for r > 1/2.
    """
    _check_args(delta, t, n)
    tol_fp = tol_fp or _oracle_tolerance(oracle)
    inner: Dict[float, float] = {}

    def U_of(x: float) -> float:
        key = round(x, 12)
        if key not in inner:
            inner[key] = _solve_U_any(x, t, n, oracle, tol_fp, depth=2).value
        return inner[key]

    def rhs(r: float) -> float:
        x = max(2.0 * r, 2.0 * delta)
        L = t + l_of_delta(min(x, 1.0))
        return (delta + 8.0 * oracle(U_of(x)) + np.sqrt(4.0 * r * L / n)
                + 10.0 * L / (3.0 * n))

    a = (t + l_of_delta(1.0)) / n
    C = delta + 8.0 + 10.0 * (t + l_of_delta(min(2.0 * delta, 1.0))) / (3.0 * n)
    r_max = _find_r_max(rhs, _smallest_dominating(2.0 * np.sqrt(a), C) + 1.0)
    result = largest_fixed_point(rhs, r_max, tol_fp, "r")
    r = result.value
    L = t + l_of_delta(min(2.0 * r, 1.0))
    components = {"delta": delta, "rademacher": 8.0 * oracle(U_of(2.0 * r)),
                  "variance": float(np.sqrt(4.0 * r * L / n)), "tail": 10.0 * L / (3.0 * n),
                  "U_2r": U_of(2.0 * r)}
    logger.info(f"r({delta:g}) = {r:.6g} with t={t:g}, n={n}")
    return FixedPointResult(r, "r", result.iterations, result.residual, result.trace, components)


def _solve_Uent_any(delta: float, t: float, n: int, psi: PsiFunction,
                    profile: ConstantsProfile, form: str, tol_fp: float) -> FixedPointResult:
    psi_one = max(psi(1.0), 0.0)
    if form == "simplified":
        K1, r0 = profile.K_1, r_zero(t, n)

        def rhs(u: float) -> float:
            return K1 * (delta + psi(np.sqrt(u)) + r0)

        a, b = K1 * psi_one, K1 * (delta + r0 + psi_one)
        components = {"delta": K1 * delta, "r0": K1 * r0}
    elif form == "full":
        terms = _u_terms(delta, t, n)
        base = terms["delta"] + terms["variance"] + terms["tail"]

        def rhs(u: float) -> float:
            return base + psi(np.sqrt(u))

        a, b = psi_one, base + psi_one
        components = dict(terms)
    else:
        raise ValueError(f"Unknown equation form: {form}")
    # psi(sqrt(u)) <= psi(1) max(1, sqrt(u)) by concavity
    r_max = max(1.0, _smallest_dominating(a, b)) + 1.0
    result = largest_fixed_point(rhs, r_max, tol_fp, "Uent")
    scale = profile.K_1 if form == "simplified" else 1.0
    components["psi"] = scale * psi(np.sqrt(result.value))
    return FixedPointResult(result.value, "Uent", result.iterations, result.residual,
                            result.trace, components)


def solve_Uent(delta: float, t: float, n: int, psi: PsiFunction,
               profile: ConstantsProfile, form: str = "simplified",
               tol_fp: float = TOL_FP) -> FixedPointResult:
    """U from psi instead of the Rademacher oracle.

    simplified: U = K_1 (delta + psi(sqrt(U)) + r0).
    full: U = delta + psi(sqrt(U)) + sqrt(2 delta (t+l)/n) + 10 (t+l) / 3n.
    """
    _check_args(delta, t, n)
    return _solve_Uent_any(delta, t, n, psi, profile, form, tol_fp)


def solve_rent(delta: float, t: float, n: int, psi: PsiFunction,
               profile: ConstantsProfile, form: str = "simplified",
               tol_fp: float = TOL_FP) -> FixedPointResult:
    """r from psi, with U_ent(2r) solved and memoized inside.

    simplified: r = delta + K_2 (psi(sqrt(U_ent(2r))) + sqrt(r r0) + r0).
    full: r = delta + psi(sqrt(U_ent(2r))) + sqrt(4r(t+l(2r))/n) + 10(t+l(2r))/3n.
    """
    _check_args(delta, t, n)
    if form not in ("simplified", "full"):
        raise ValueError(f"Unknown equation form: {form}")
    inner: Dict[float, float] = {}

    def U_of(x: float) -> float:
        key = round(x, 12)
        if key not in inner:
            inner[key] = _solve_Uent_any(x, t, n, psi, profile, form, tol_fp).value
        return inner[key]

    r0 = r_zero(t, n)

    def rhs(r: float) -> float:
        x = max(2.0 * r, 2.0 * delta)
        complexity = psi(np.sqrt(U_of(x)))
        if form == "simplified":
            return delta + profile.K_2 * (complexity + np.sqrt(r * r0) + r0)
        L = t + l_of_delta(min(x, 1.0))
        return delta + complexity + np.sqrt(4.0 * r * L / n) + 10.0 * L / (3.0 * n)

    r_max = _find_r_max(rhs, 2.0 * delta + 1.0)
    result = largest_fixed_point(rhs, r_max, tol_fp, "rent")
    r = result.value
    components = {"delta": delta, "psi": psi(np.sqrt(U_of(2.0 * r))), "U_2r": U_of(2.0 * r)}
    logger.info(f"r_ent({delta:g}) = {r:.6g} ({form}) with t={t:g}, n={n}")
    return FixedPointResult(r, "rent", result.iterations, result.residual, result.trace,
                            components)

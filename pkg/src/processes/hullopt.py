"""Suprema of linear functionals over convex hulls, and convex-hull ERM.

Points of conv(F) - conv(F) are written w = lambda - mu with lambda, mu in the
simplex; the linear functional is c . w with c_i = <z, f_i>_scaled and the
empirical norm is w' G w with G the Gram matrix.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from src.classes.classdata import (ConvexCombination, SampledClass, empirical_gram,
                                   evaluate_combination, squared_distances)
from src.config import (DEFAULT_THREADS, LP_GAP_TOL, MAX_BISECTIONS, MAX_ITER,
                        SOFT_FAIL_FACTOR, TOL_OPT)
from src.processes.process import (ModulusCurve, draw_matrix, map_draw_blocks,
                                   mean_and_std_error, process_scale)

logger = logging.getLogger(__name__)


class HullSolverError(RuntimeError):
    """The norm-constrained hull supremum could not be certified."""

    def __init__(self, message: str, lower: float, upper: float):
        super().__init__(f"{message} (bracket [{lower:.10g}, {upper:.10g}])")
        self.lower = lower
        self.upper = upper


class LinearProgramError(RuntimeError):
    """The LP solver failed or its duality gap is too large."""


@dataclass(frozen=True)
class HullSupremumProblem:
    F: SampledClass
    objective: np.ndarray
    constraint: Literal["norm_ball", "mean_cap", "none"] = "none"
    radius: float = 0.0
    kind: Literal["gaussian", "rademacher"] = "gaussian"


@dataclass(frozen=True)
class HullSupResult:
    value: float
    lower: float
    upper: float
    iterations: int = 0
    tau: float = 0.0
    exact: bool = False


@dataclass(frozen=True)
class ErmSolution:
    combination: ConvexCombination
    objective_value: float
    iterations: int
    residual: float


def _coefficients(F: SampledClass, z: np.ndarray, kind: str) -> np.ndarray:
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != F.n:
        raise ValueError(f"Objective length {z.shape[0]} does not match n={F.n}")
    return process_scale(kind, F.n) * (F.values @ z)


@dataclass
class _Side:
    """An inner iterate kept on one side of the norm constraint."""

    w: np.ndarray
    Gw: np.ndarray
    q: float
    value: float


@dataclass
class _State:
    """Simplex weights of the current iterate; reused as a warm start."""

    lam: np.ndarray
    mu: np.ndarray
    Gw: Optional[np.ndarray] = None


class HullPairSolver:
    """sup { c . (lambda - mu) : ||A'(lambda - mu)||_{P_n} <= delta } for one class.

    The Gram matrix and the diameter are computed once and reused across
    draws and radii.
    """

    def __init__(self, F: SampledClass, tol_opt: float = TOL_OPT, max_iter: int = MAX_ITER):
        self.F = F
        self.G = empirical_gram(F)
        self.sq_dist = squared_distances(self.G)
        self.diameter = float(np.sqrt(self.sq_dist.max()))
        self.tol_opt = tol_opt
        self.max_iter = max_iter

    def objective(self, z: np.ndarray, kind: str = "gaussian") -> np.ndarray:
        return _coefficients(self.F, z, kind)

    @staticmethod
    def initial_state(c: np.ndarray) -> _State:
        """Start at the unconstrained maximizer, the top and bottom vertices of c."""
        state = _State(lam=np.zeros(c.shape[0]), mu=np.zeros(c.shape[0]))
        state.lam[int(np.argmax(c))] = 1.0
        state.mu[int(np.argmin(c))] = 1.0
        return state

    def _inner(self, c: np.ndarray, tau: float, state: _State, tol: float) -> Tuple[float, int]:
        """Pairwise conditional gradient for max c.w - tau w'Gw; returns (gap, iterations)."""
        G = self.G
        lam, mu = state.lam, state.mu
        w = lam - mu
        Gw = state.Gw if state.Gw is not None else G @ w
        gap = np.inf
        it = 0
        for it in range(1, self.max_iter + 1):
            g = c - 2.0 * tau * Gw
            gap = float(g.max() - g.min() - g @ w)
            if gap <= tol:
                break
            supp_l = np.nonzero(lam > 0)[0]
            supp_m = np.nonzero(mu > 0)[0]
            s_l = int(np.argmax(g))
            a_l = int(supp_l[np.argmin(g[supp_l])])
            s_m = int(np.argmin(g))
            a_m = int(supp_m[np.argmax(g[supp_m])])
            rate_l = g[s_l] - g[a_l]
            rate_m = g[a_m] - g[s_m]
            if max(rate_l, rate_m) <= 0:
                break
            if rate_l >= rate_m:
                i, j, gamma_max, on_lambda = s_l, a_l, lam[a_l], True
            else:
                i, j, gamma_max, on_lambda = a_m, s_m, mu[a_m], False
            # direction in w is e_i - e_j
            slope = g[i] - g[j]
            kappa = G[i, i] + G[j, j] - 2.0 * G[i, j]
            if kappa > 0 and tau > 0:
                gamma = min(gamma_max, slope / (2.0 * tau * kappa))
            else:
                gamma = gamma_max
            if gamma <= 0:
                break
            if on_lambda:
                lam[i] += gamma
                lam[j] -= gamma
                if lam[j] < 1e-15:
                    lam[j] = 0.0
            else:
                mu[i] -= gamma
                mu[j] += gamma
                if mu[i] < 1e-15:
                    mu[i] = 0.0
            w = lam - mu
            Gw = Gw + gamma * (G[:, i] - G[:, j])
        state.Gw = Gw
        return gap, it

    def solve(self, c: np.ndarray, delta: float, state: Optional[_State] = None) -> HullSupResult:
        """Certified supremum for the functional with coefficients ``c``.

        Args:
            c: Per-vertex values c_i = <z, f_i>_scaled
            delta: Norm radius
            state: Optional warm start (updated in place)

        Returns:
            HullSupResult whose value is the certified upper end of the bracket
        """
        if delta < 0:
            raise ValueError(f"Radius must be nonnegative, got {delta}")
        c = np.asarray(c, dtype=float)
        top, bottom = int(np.argmax(c)), int(np.argmin(c))
        vertex_value = float(c[top] - c[bottom])
        if delta == 0 or vertex_value <= 0:
            return HullSupResult(0.0, 0.0, 0.0, exact=True)
        if delta >= self.diameter or self.sq_dist[top, bottom] <= delta * delta:
            return HullSupResult(vertex_value, vertex_value, vertex_value, exact=True)

        if state is None:
            state = self.initial_state(c)
        d2 = delta * delta
        upper = vertex_value
        lower = 0.0
        above: Optional[_Side] = None
        below: Optional[_Side] = None
        tau_lo, tau_hi = 0.0, None
        tau = vertex_value / (2.0 * d2)
        total_iter = 0

        def tolerance(u: float) -> float:
            return self.tol_opt * max(1.0, abs(u))

        for _ in range(MAX_BISECTIONS):
            gap, iters = self._inner(c, tau, state, 0.1 * tolerance(upper))
            total_iter += iters
            w = state.lam - state.mu
            q = max(float(w @ state.Gw), 0.0)
            value = float(c @ w)
            upper = min(upper, tau * d2 + value - tau * q + max(gap, 0.0))
            side = _Side(w=w.copy(), Gw=state.Gw.copy(), q=q, value=value)
            if q > d2:
                above, tau_lo = side, tau
                lower = max(lower, value * np.sqrt(d2 / q))
            else:
                below, tau_hi = side, tau
                lower = max(lower, value)
            if above is not None and below is not None:
                lower = max(lower, self._blend(above, below, d2))
            if upper - lower <= tolerance(upper):
                return HullSupResult(upper, lower, upper, total_iter, tau)
            if tau_hi is None:
                tau *= 4.0
            elif tau_lo == 0.0:
                tau = tau_hi / 4.0
            else:
                tau = np.sqrt(tau_lo * tau_hi)
                if tau_hi - tau_lo <= 1e-15 * tau_hi:
                    break
        raise HullSolverError("Hull supremum not certified", lower, upper)

    @staticmethod
    def _blend(above: _Side, below: _Side, d2: float) -> float:
        """Value of the convex blend of the two sides sitting on the sphere."""
        q_hl = float(above.w @ below.Gw)
        a = above.q - 2.0 * q_hl + below.q
        b = 2.0 * (q_hl - below.q)
        c0 = below.q - d2
        if abs(a) < 1e-15:
            theta = -c0 / b if b > 0 else 0.0
        else:
            disc = max(b * b - 4.0 * a * c0, 0.0)
            theta = (-b + np.sqrt(disc)) / (2.0 * a)
        theta = float(np.clip(theta, 0.0, 1.0))
        return theta * above.value + (1.0 - theta) * below.value


def hull_pair_sup(F: SampledClass, z: np.ndarray, delta: float, kind: str = "gaussian",
                  tol_opt: float = TOL_OPT, max_iter: int = MAX_ITER) -> float:
    """sup <z, h>_scaled over h in conv(F) - conv(F) with ||h|| <= delta."""
    solver = HullPairSolver(F, tol_opt=tol_opt, max_iter=max_iter)
    return solve_problem(HullSupremumProblem(F, z, "norm_ball", delta, kind), solver)


def bruteforce_lipschitz(F: SampledClass, z: np.ndarray, delta: float,
                         kind: str = "gaussian") -> float:
    """Grid-error constant: value lost by restricting weights to a step grid is <= L * step."""
    c = process_scale(kind, F.n) * (F.values @ np.asarray(z, dtype=float))
    vertex_value = float(c.max() - c.min())
    if delta <= 0:
        return 0.0
    return F.m * (float(np.abs(c).max()) + float(F.norms.max()) * vertex_value / delta)


def simplex_bruteforce_sup(F: SampledClass, z: np.ndarray, delta: float, step: float,
                           kind: str = "gaussian") -> float:
    """Exhaustive grid search over differences of two step-grids of the simplex.

    Differences lambda - mu of grid points are exactly the grid vectors w with
    sum(w) = 0 and sum|w| <= 2.
    """
    if F.m > 4:
        raise ValueError(f"Brute force limited to m <= 4, got m={F.m}")
    if not 0 < step <= 0.1:
        raise ValueError(f"Grid step must lie in (0, 0.1], got {step}")
    if F.m == 1:
        return 0.0
    c = process_scale(kind, F.n) * (F.values @ np.asarray(z, dtype=float))
    G = empirical_gram(F)
    K = int(round(1.0 / step))
    ticks = np.arange(-K, K + 1)
    best = 0.0
    d2 = delta * delta * (1.0 + 1e-12) + 1e-15
    # the first free coordinate is looped over to bound memory
    combos = list(itertools.product(ticks, repeat=F.m - 2))
    rest = np.array(combos, dtype=float).reshape(len(combos), F.m - 2)
    for first in ticks:
        free = np.column_stack([np.full(rest.shape[0], first, dtype=float), rest])
        last = -free.sum(axis=1, keepdims=True)
        k = np.hstack([free, last])
        k = k[np.abs(k).sum(axis=1) <= 2 * K]
        if k.size == 0:
            continue
        w = k / K
        norms = np.einsum("ij,jk,ik->i", w, G, w)
        feasible = norms <= d2
        if np.any(feasible):
            best = max(best, float((w[feasible] @ c).max()))
    return best


def modulus_convex_hull(F: SampledClass, delta_grid: Sequence[float], n_draws: int, seed: int,
                        n_jobs: int = DEFAULT_THREADS, tol_opt: float = TOL_OPT,
                        keep_draws: bool = False) -> ModulusCurve:
    """Monte Carlo estimate of omega(conv(F), delta).

    Draw k uses the same Gaussian vector as ``modulus_finite`` with the same
    seed, so the two curves can be compared pathwise.
    """
    deltas = np.sort(np.asarray(delta_grid, dtype=float).ravel())
    if deltas.size == 0 or np.any(deltas < 0):
        raise ValueError("Delta grid must be nonempty and nonnegative")
    solver = HullPairSolver(F, tol_opt=tol_opt)

    def one_draw(noise: np.ndarray) -> np.ndarray:
        out = np.zeros(len(deltas) + 1)
        # warm start shared across the increasing deltas of one draw
        state = solver.initial_state(solver.objective(noise))
        for col, delta in enumerate(deltas):
            try:
                problem = HullSupremumProblem(F, noise, "norm_ball", delta)
                out[col] = solve_problem(problem, solver, state)
            except HullSolverError as e:
                if e.upper - e.lower > SOFT_FAIL_FACTOR * tol_opt * max(1.0, abs(e.upper)):
                    logger.error(f"Hard solver failure on '{F.label}' at delta={delta:.4g}: {str(e)}")
                    raise
                logger.warning(f"Soft solver failure at delta={delta:.4g}: {str(e)}")
                out[col] = e.upper
                out[-1] += 1
        return out

    def block(start: int, stop: int) -> np.ndarray:
        noise = draw_matrix(F.n, "gaussian", seed, start, stop)
        return np.stack([one_draw(row) for row in noise], axis=0)

    table = map_draw_blocks(block, n_draws, n_jobs)
    sups, failures = table[:, :-1], int(table[:, -1].sum())
    # suprema are nondecreasing in delta draw by draw up to solver tolerance
    sups = np.maximum.accumulate(sups, axis=1)
    est, se = mean_and_std_error(sups)
    if failures:
        logger.warning(f"modulus_convex_hull '{F.label}': {failures} soft solver failures")
    logger.info(f"modulus_convex_hull '{F.label}': {len(deltas)} deltas, {n_draws} draws, seed={seed}")
    return ModulusCurve(deltas=deltas, estimates=est, std_errors=se, n_draws=n_draws, seed=seed,
                        label=f"conv({F.label})", per_draw=sups if keep_draws else None,
                        failures=failures)


def mean_capped_sup(a: np.ndarray, p: np.ndarray, r: float) -> Optional[float]:
    """max a . lambda over the simplex subject to p . lambda <= r.

    Enumerates basic solutions: single feasible vertices and two-vertex
    mixtures sitting on the cap. Returns None when the feasible set is empty.
    """
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    inside = p <= r
    if not np.any(inside):
        return None
    best = float(a[inside].max())
    outside = ~inside
    if np.any(outside):
        ai, pi = a[inside][:, None], p[inside][:, None]
        aj, pj = a[outside][None, :], p[outside][None, :]
        theta = (r - pi) / (pj - pi)
        best = max(best, float((ai + theta * (aj - ai)).max()))
    return best


def mean_capped_sup_lp(a: np.ndarray, p: np.ndarray, r: float) -> Optional[float]:
    """Same problem as ``mean_capped_sup`` solved with linprog."""
    m = len(a)
    res = linprog(-np.asarray(a, dtype=float), A_ub=np.asarray(p, dtype=float)[None, :],
                  b_ub=[r], A_eq=np.ones((1, m)), b_eq=[1.0], bounds=(0, None), method="highs")
    if res.status == 2:
        return None
    if not res.success:
        raise LinearProgramError(res.message)
    return float(-res.fun)


class FrozenHullRademacherOracle:
    """r -> E sup_{g in conv(G), P_n g <= r} |R_n(g)| over frozen sign draws."""

    def __init__(self, G: SampledClass, n_draws: int, seed: int, method: str = "exact",
                 n_jobs: int = DEFAULT_THREADS):
        if not G.range_checked:
            raise ValueError(f"Class '{G.label}' must be range-checked for mean localization")
        self.label = f"conv({G.label})"
        self.n_draws = n_draws
        self.seed = seed
        self._means = G.means
        self._solve = mean_capped_sup if method == "exact" else mean_capped_sup_lp
        scale = process_scale("rademacher", G.n)

        def block(start: int, stop: int) -> np.ndarray:
            return scale * draw_matrix(G.n, "rademacher", seed, start, stop) @ G.values.T

        self._values = map_draw_blocks(block, n_draws, n_jobs)
        self._cache = {}
        self.last_std_error = 0.0

    def per_draw(self, r: float) -> np.ndarray:
        if r < 0:
            raise ValueError(f"Localization radius must be nonnegative, got {r}")
        key = float(r)
        if key in self._cache:
            return self._cache[key]
        out = np.zeros(self.n_draws)
        if self._means.min() <= r:
            for k, a in enumerate(self._values):
                out[k] = max(self._solve(a, self._means, r), self._solve(-a, self._means, r), 0.0)
        self._cache[key] = out
        return out

    def __call__(self, r: float) -> float:
        est, se = mean_and_std_error(self.per_draw(r))
        self.last_std_error = float(se)
        return float(est)


def hull_localized_rademacher(G: SampledClass, r: float, n_draws: int, seed: int,
                              method: str = "exact",
                              n_jobs: int = DEFAULT_THREADS) -> Tuple[float, float]:
    """E sup over the mean-capped hull of |R_n|, with its standard error."""
    if r < 0:
        raise ValueError(f"Localization radius must be nonnegative, got {r}")
    oracle = FrozenHullRademacherOracle(G, n_draws, seed, method=method, n_jobs=n_jobs)
    est, se = mean_and_std_error(oracle.per_draw(r))
    return float(est), float(se)


def erm_convex_hull(G: SampledClass, y: np.ndarray) -> ErmSolution:
    """argmin over conv(G) of P_n |g - y| as a linear program with slacks.

    Args:
        G: Range-checked base class
        y: Target values at the sample points, in [0, 1]

    Returns:
        ErmSolution with the duality gap of the LP as residual
    """
    y = np.asarray(y, dtype=float).ravel()
    if not G.range_checked:
        raise ValueError(f"Class '{G.label}' must be range-checked for ERM")
    if y.shape[0] != G.n:
        raise ValueError(f"Target length {y.shape[0]} does not match n={G.n}")
    if np.any(y < 0) or np.any(y > 1):
        raise ValueError("Targets must lie in [0, 1]")
    m, n = G.m, G.n
    A = G.values.T
    I = np.eye(n)
    cost = np.concatenate([np.zeros(m), np.full(n, 1.0 / n)])
    A_ub = np.vstack([np.hstack([A, -I]), np.hstack([-A, -I])])
    b_ub = np.concatenate([y, -y])
    A_eq = np.concatenate([np.ones(m), np.zeros(n)])[None, :]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=(0, None),
                  method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if not res.success:
        logger.error(f"ERM LP failed on '{G.label}': {res.message}")
        raise LinearProgramError(res.message)
    dual = float(b_ub @ res.ineqlin.marginals + res.eqlin.marginals[0])
    gap = abs(float(res.fun) - dual)
    if gap > LP_GAP_TOL:
        raise LinearProgramError(f"Duality gap {gap:.3g} exceeds {LP_GAP_TOL:g}")
    combo = ConvexCombination.from_unnormalized(res.x[:m])
    fitted = evaluate_combination(G, combo)
    objective = float(np.mean(np.abs(fitted - y)))
    logger.debug(f"ERM on '{G.label}': objective={objective:.3g}, gap={gap:.2g}, nit={res.nit}")
    return ErmSolution(combination=combo, objective_value=objective,
                       iterations=int(res.nit), residual=gap)


def solve_problem(problem: HullSupremumProblem, solver: Optional[HullPairSolver] = None,
                  state: Optional[_State] = None) -> float:
    """Dispatch one of the three supported problem shapes.

    A solver built for problem.F (and a warm-start state) may be passed in
    to reuse its Gram matrix across problems on the same class.
    """
    F = problem.F
    c = _coefficients(F, problem.objective, problem.kind)
    if problem.constraint == "norm_ball":
        if solver is None:
            solver = HullPairSolver(F)
        return solver.solve(c, problem.radius, state).value
    if problem.constraint == "mean_cap":
        best = mean_capped_sup(c, F.means, problem.radius)
        return 0.0 if best is None else best
    return float(c.max())

"""Tests for psi functions and the fixed-point solvers."""

import logging
import unittest

import numpy as np

from src.bounds.fixed_point import (FixedPointError, PsiFunction, build_psi_direct,
                                    build_psi_entropy, build_psi_theorem1, l_of_delta,
                                    largest_fixed_point, psi_entropy, psi_theorem1, r_zero,
                                    solve_r, solve_rent, solve_U, solve_Uent, solve_zero_error)
from src.bounds.profile import ConstantsProfile
from src.classes.classdata import SampledClass
from src.classes.generators import GeneratorSpec, generate
from src.classes.nets import CoveringCurve, covering_curve, geometric_grid
from src.processes.process import FrozenRademacherOracle, modulus_finite

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def linear_psi(c: float, n: int = 100) -> PsiFunction:
    return PsiFunction(grid=np.array([0.0, 1.0]), values=np.array([0.0, c]), method="theorem1", n=n)


def zero_oracle(r: float) -> float:
    return 0.0


class TestPsi(unittest.TestCase):
    """Test suite for psi constructions."""

    def setUp(self):
        """Set up fixtures."""
        eps = np.array([1.0, 0.5, 0.25, 0.125])
        sizes = np.full(4, 2)
        self.flat = CoveringCurve(epsilons=eps, sizes=sizes, entropies=np.log(sizes),
                                  raw_sizes=sizes)

    def test_psi_validation(self):
        """Test the shape checks and the linear extension."""
        with self.assertRaises(ValueError):
            PsiFunction(grid=np.array([0.0, 1.0]), values=np.array([0.1, 0.2]), method="theorem1", n=1)
        with self.assertRaises(ValueError):
            PsiFunction(grid=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 0.3, 0.2]),
                        method="theorem1", n=1)
        with self.assertRaises(ValueError):
            PsiFunction(grid=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 0.1, 0.5]),
                        method="theorem1", n=1)
        psi = linear_psi(0.4)
        self.assertAlmostEqual(psi(0.5), 0.2)
        self.assertAlmostEqual(psi(3.0), 1.2)
        with self.assertRaises(ValueError):
            psi(-1.0)

    def test_psi_entropy_examples(self):
        """Test the hand quadrature and the 1/sqrt(n) scaling."""
        self.assertAlmostEqual(psi_entropy(self.flat, 100, 1.0),
                               4.0 * np.sqrt(3.0) / 10.0 * 0.5 * np.sqrt(np.log(2)))
        self.assertAlmostEqual(psi_entropy(self.flat, 100, 1.0), 0.2884, places=4)
        self.assertEqual(psi_entropy(self.flat, 100, 0.0), 0.0)
        self.assertAlmostEqual(psi_entropy(self.flat, 200, 0.7) * np.sqrt(2.0),
                               psi_entropy(self.flat, 100, 0.7))
        psi = build_psi_entropy(self.flat, 100, np.linspace(0.0, 3.0, 31))
        self.assertEqual(psi.method, "entropy_integral")
        self.assertAlmostEqual(psi(1.0), psi_entropy(self.flat, 100, 1.0))

    def test_psi_theorem1(self):
        """Test the singleton value, psi(0) = 0 and concavity on a generated class."""
        logger.info("Testing psi from the Theorem 1 bound...")
        single = SampledClass([[0.5, 0.5, 0.5]])
        grid = [1.0, 0.5, 0.25]
        mod = modulus_finite(single, grid, 50, seed=1)
        cov = covering_curve(single, grid)
        self.assertAlmostEqual(psi_theorem1(mod, cov, 50, 0.3, distinct=1),
                               np.sqrt(np.pi / 100.0) * 0.3)

        G = generate(GeneratorSpec(kind="interval_indicators", m=30, n=100, seed=2))
        eps = geometric_grid(1.0, 0.05, 10)
        mod = modulus_finite(G, eps, 300, seed=3)
        cov = covering_curve(G, eps)
        self.assertEqual(psi_theorem1(mod, cov, G.n, 0.0, distinct=G.distinct_count()), 0.0)
        psi = build_psi_theorem1(mod, cov, G.n, np.linspace(0.0, 1.0, 21), G.distinct_count())
        self.assertTrue(np.all(np.diff(psi.values) >= 0))

    def test_psi_direct(self):
        """Test the concave majorant of a frozen Rademacher oracle."""
        G = SampledClass(np.random.default_rng(4).uniform(size=(20, 30)), range_checked=True)
        oracle = FrozenRademacherOracle(G, 200, seed=5)
        grid = np.linspace(0.0, 1.0, 11)
        psi = build_psi_direct(oracle, grid, G.n)
        for x in grid:
            self.assertGreaterEqual(psi(x) + 1e-12, oracle(x * x))


class TestFixedPoints(unittest.TestCase):
    """Test suite for fixed-point solvers."""

    def test_l_of_delta(self):
        """Test closed-form values and monotonicity."""
        self.assertAlmostEqual(l_of_delta(1.0), 2.0 * np.log(np.pi / np.sqrt(3.0)))
        self.assertAlmostEqual(l_of_delta(1.0), 1.1907, places=4)
        self.assertAlmostEqual(l_of_delta(0.5), 2.5770, places=4)
        self.assertGreater(l_of_delta(0.25), l_of_delta(0.5))
        for bad in (0.0, 1.5):
            with self.assertRaises(ValueError):
                l_of_delta(bad)

    def test_largest_fixed_point_closed_forms(self):
        """Test sqrt maps and the zero map."""
        logger.info("Testing closed-form fixed points...")
        result = largest_fixed_point(lambda r: np.sqrt(r) / 2.0, 1.0)
        self.assertAlmostEqual(result.value, 0.25, delta=1e-8)
        self.assertLessEqual(result.residual, 1e-8)
        self.assertEqual(result.trace[0], 1.0)
        for c in (0.3, 1.7):
            self.assertAlmostEqual(largest_fixed_point(lambda r: c * np.sqrt(r), 4.0).value,
                                   c * c, delta=1e-8)
        self.assertEqual(largest_fixed_point(zero_oracle, 1.0).value, 0.0)
        with self.assertRaises(FixedPointError):
            largest_fixed_point(lambda r: r + 1.0, 2.0)

    def test_largest_solution_found_past_a_dip(self):
        """Test that the probe finds a larger solution than the first one reached."""
        # fixed points at 0.2 and 0.8; iterating from 1 jumps over 0.8
        def rhs(r):
            if r > 0.9:
                return 0.5
            return 0.8 if r >= 0.6 else 0.2

        result = largest_fixed_point(rhs, 1.0)
        self.assertAlmostEqual(result.value, 0.8)
        self.assertIn(0.2, result.trace)

    def test_solve_zero_error(self):
        """Test r_hat = c^2 for psi(x) = c x and the largest-solution probe."""
        for c in (0.1, 0.5, 1.0):
            psi = linear_psi(c)
            result = solve_zero_error(psi)
            self.assertEqual(result.equation, "Uo")
            self.assertAlmostEqual(result.value, c * c, delta=1e-8)
            probe = 1.1 * result.value
            self.assertLess(psi(np.sqrt(probe)), probe)
        self.assertEqual(solve_zero_error(linear_psi(0.0)).value, 0.0)

    def test_zero_error_scaling_property(self):
        """Test psi(sqrt(C (r + c))) <= sqrt(C) (r + c) for an entropy psi."""
        G = generate(GeneratorSpec(kind="interval_indicators", m=60, n=200, seed=7))
        cov = covering_curve(G, geometric_grid(1.0, 0.02, 14))
        psi = build_psi_entropy(cov, G.n, np.linspace(0.0, 2.0, 41))
        r_hat = solve_zero_error(psi).value
        self.assertLess(psi(np.sqrt(1.1 * r_hat)), 1.1 * r_hat)
        for C in (1.5, 2.0, 4.0):
            for c in (0.0, 0.01):
                x = C * (r_hat + c)
                self.assertLessEqual(psi(np.sqrt(x)), np.sqrt(C) * (r_hat + c) + 1e-8)

    def test_solve_U_zero_oracle(self):
        """Test U against hand arithmetic with a vanishing oracle."""
        logger.info("Testing U with a zero oracle...")
        L = 1.0 + l_of_delta(1.0)
        expected = 1.0 + np.sqrt(2.0 * L / 100.0) + 10.0 * L / 300.0
        result = solve_U(1.0, 1.0, 100, zero_oracle)
        self.assertAlmostEqual(result.value, expected, delta=1e-10)
        self.assertAlmostEqual(result.components["tail"], 10.0 * L / 300.0)
        self.assertEqual(result.components["rademacher"], 0.0)
        with self.assertRaises(ValueError):
            solve_U(1.5, 1.0, 100, zero_oracle)
        with self.assertRaises(ValueError):
            solve_U(0.5, 0.0, 100, zero_oracle)

    def test_solve_U_monotone(self):
        """Test monotonicity of U in delta and t with a frozen oracle."""
        G = SampledClass(np.random.default_rng(6).uniform(size=(15, 50)), range_checked=True)
        oracle = FrozenRademacherOracle(G, 200, seed=2)
        values = [solve_U(d, 1.0, G.n, oracle).value for d in (0.1, 0.3, 0.6, 1.0)]
        self.assertTrue(np.all(np.diff(values) >= -2e-4))
        by_t = [solve_U(0.3, t, G.n, oracle).value for t in (0.5, 1.0, 3.0)]
        self.assertTrue(np.all(np.diff(by_t) >= -2e-4))

    def test_solve_r(self):
        """Test the nested equation with exact and frozen oracles."""
        logger.info("Testing r(delta)...")
        result = solve_r(0.1, 1.0, 1000, zero_oracle)
        self.assertEqual(result.equation, "r")
        self.assertGreaterEqual(result.value, 0.1)
        self.assertLessEqual(result.residual, 1e-8)
        parts = sum(result.components[k] for k in ("delta", "rademacher", "variance", "tail"))
        self.assertAlmostEqual(parts, result.value, delta=1e-7)
        larger_t = solve_r(0.1, 3.0, 1000, zero_oracle)
        self.assertGreaterEqual(larger_t.value, result.value)

        G = SampledClass(np.random.default_rng(8).uniform(size=(10, 40)), range_checked=True)
        oracle = FrozenRademacherOracle(G, 100, seed=3)
        noisy = solve_r(0.2, 1.0, G.n, oracle)
        self.assertGreaterEqual(noisy.value, 0.2)
        self.assertLessEqual(noisy.residual, 1e-4)

    def test_simplified_equations(self):
        """Test the psi-based equations against their closed forms."""
        profile = ConstantsProfile(K_1=2.0, K_2=1.5)
        t, n, delta, c = 1.0, 500, 0.2, 0.3
        r0 = r_zero(t, n)
        zero = solve_Uent(delta, t, n, linear_psi(0.0, n), profile)
        self.assertAlmostEqual(zero.value, 2.0 * (delta + r0), delta=1e-8)
        root = (2.0 * c + np.sqrt(4.0 * c * c + 8.0 * (delta + r0))) / 2.0
        linear = solve_Uent(delta, t, n, linear_psi(c, n), profile)
        self.assertAlmostEqual(linear.value, root * root, delta=1e-7)

        full = solve_Uent(1.0, 1.0, 100, linear_psi(0.0), profile, form="full")
        self.assertAlmostEqual(full.value, solve_U(1.0, 1.0, 100, zero_oracle).value, delta=1e-10)

        rent = solve_rent(delta, t, n, linear_psi(0.0, n), profile)
        s = (1.5 * np.sqrt(r0) + np.sqrt(2.25 * r0 + 4.0 * (delta + 1.5 * r0))) / 2.0
        self.assertAlmostEqual(rent.value, s * s, delta=1e-7)
        rent_linear = solve_rent(delta, t, n, linear_psi(c, n), profile)
        self.assertGreater(rent_linear.value, rent.value)
        with self.assertRaises(ValueError):
            solve_Uent(delta, t, n, linear_psi(c, n), profile, form="other")


if __name__ == '__main__':
    unittest.main()

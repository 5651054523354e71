"""Tests for the Theorem 1 bound, entropy integrals and chaining sums."""

import logging
import unittest

import numpy as np

from src.bounds.complexity import (RateCurve, chaining_terms, dudley_integral,
                                   entropy_from_modulus, rate_modulus_curve, rate_reference,
                                   separated_moduli, sudakov_ratio, theorem1_bound, theorem1_curve,
                                   truncated_dudley_bound, unit_diameter)
from src.classes.classdata import SampledClass
from src.classes.generators import GeneratorSpec, generate
from src.classes.nets import CoveringCurve, covering_curve, geometric_grid
from src.config import ACCEPTANCE
from src.experiments.utils.rate_fit import fit_log_log
from src.processes.hullopt import modulus_convex_hull
from src.processes.process import ModulusCurve, gaussian_sup_finite, modulus_finite

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def flat_curve(epsilons, size=2) -> CoveringCurve:
    eps = np.asarray(epsilons, dtype=float)
    sizes = np.full(eps.shape, size)
    return CoveringCurve(epsilons=eps, sizes=sizes, entropies=np.log(sizes), raw_sizes=sizes)


def exact_curve(deltas, values) -> ModulusCurve:
    deltas = np.asarray(deltas, dtype=float)
    order = np.argsort(deltas)
    values = np.asarray(values, dtype=float)[order]
    return ModulusCurve(deltas=deltas[order], estimates=values, std_errors=np.zeros_like(values),
                        n_draws=0, seed=0)


class TestTheorem1Bound(unittest.TestCase):
    """Test suite for the convex-hull modulus bound."""

    def setUp(self):
        """Set up fixtures."""
        self.two_point = SampledClass([[0.0] * 4, [1.0] * 4], label="two_point", range_checked=True)

    def test_two_point_example(self):
        """Test the bound and its minimizer for two points at distance 1."""
        logger.info("Testing Theorem 1 bound on two points...")
        grid = [1.0, 0.5]
        mod = modulus_finite(self.two_point, grid, 4000, seed=1)
        cov = covering_curve(self.two_point, grid)
        value, eps = theorem1_bound(mod, cov, 0.25)
        self.assertAlmostEqual(value, 0.25 * np.sqrt(2.0))
        self.assertEqual(eps, 0.5)
        hull = modulus_convex_hull(self.two_point, [0.25], 4000, seed=1)
        self.assertLessEqual(hull.estimates[0], value)

    def test_singleton_and_zero_radius(self):
        """Test the trivial classes and delta = 0."""
        single = SampledClass([[0.4, 0.4]])
        grid = [1.0, 0.5, 0.25]
        mod = modulus_finite(single, grid, 100, seed=2)
        cov = covering_curve(single, grid)
        self.assertAlmostEqual(theorem1_bound(mod, cov, 0.3)[0], 0.3)
        value, _ = theorem1_bound(modulus_finite(self.two_point, grid, 200, seed=2),
                                  covering_curve(self.two_point, grid), 0.0)
        self.assertEqual(value, 0.0)
        with self.assertRaises(ValueError):
            theorem1_bound(exact_curve([0.1], [0.0]), flat_curve([1.0, 0.5]), 0.2)

    def test_refinement_lowers_bound(self):
        """Test that adding grid points never raises the bound."""
        F = generate(GeneratorSpec(kind="ball", d=2, m=40, n=30, seed=3))
        grid = geometric_grid(1.0, 0.05, 10)
        mod = modulus_finite(F, grid, 200, seed=3)
        cov = covering_curve(F, grid)
        keep = np.arange(0, 10, 3)
        coarse_cov = CoveringCurve(epsilons=cov.epsilons[keep], sizes=cov.sizes[keep],
                                   entropies=cov.entropies[keep], raw_sizes=cov.raw_sizes[keep])
        coarse_mod = exact_curve(grid[keep], [mod.estimates[mod.index_of(e)] for e in grid[keep]])
        for delta in (0.05, 0.1, 0.3):
            self.assertLessEqual(theorem1_bound(mod, cov, delta)[0],
                                 theorem1_bound(coarse_mod, coarse_cov, delta)[0] + 1e-15)

    def test_master_inequality_small(self):
        """Test the hull modulus against the bound with an MC band on a small ball."""
        logger.info("Testing the master inequality on a small class...")
        F = generate(GeneratorSpec(kind="ball", d=2, m=10, n=12, seed=4))
        grid = geometric_grid(F.diameter, 0.05 * F.diameter, 8)
        mod = modulus_finite(F, grid, 300, seed=5)
        cov = covering_curve(F, grid)
        deltas = np.array([0.1, 0.3, 0.6]) * F.diameter
        hull = modulus_convex_hull(F, deltas, 80, seed=6)
        bounds, _, errors = theorem1_curve(mod, cov, deltas)
        band = 3.0 * np.sqrt(hull.std_errors ** 2 + errors ** 2)
        self.assertTrue(np.all(hull.estimates <= bounds + band))

    @unittest.skipUnless(ACCEPTANCE, "acceptance-scale run")
    def test_master_inequality_acceptance(self):
        """Test zero violations on the acceptance fixtures."""
        specs = [GeneratorSpec(kind="two_point", n=50),
                 GeneratorSpec(kind="segment", m=11, n=50),
                 GeneratorSpec(kind="ball", d=2, m=40, n=60, seed=1),
                 GeneratorSpec(kind="ball", d=3, m=40, n=60, seed=2),
                 GeneratorSpec(kind="interval_indicators", m=40, n=200, seed=3)]
        for spec in specs:
            F = generate(spec)
            diam = max(F.diameter, 1e-12)
            grid = geometric_grid(diam, 0.01 * diam, 20)
            mod = modulus_finite(F, grid, 20_000, seed=7, n_jobs=4)
            cov = covering_curve(F, grid)
            deltas = np.geomspace(0.02, 1.0, 10) * diam
            hull = modulus_convex_hull(F, deltas, 10_000, seed=8, n_jobs=4)
            bounds, _, errors = theorem1_curve(mod, cov, deltas)
            band = 3.0 * np.sqrt(hull.std_errors ** 2 + errors ** 2)
            self.assertTrue(np.all(hull.estimates <= bounds + band), msg=spec.label)


class TestEntropyIntegrals(unittest.TestCase):
    """Test suite for Dudley integrals and the Sudakov ratio."""

    def test_dudley_examples(self):
        """Test piecewise-constant quadrature by hand values."""
        cov = flat_curve([1.0, 0.5, 0.25])
        self.assertAlmostEqual(dudley_integral(cov, 0.25, 1.0), 0.75 * np.sqrt(np.log(2)))
        self.assertAlmostEqual(dudley_integral(flat_curve([1.0, 0.5], size=1), 0.0, 1.0), 0.0)
        self.assertEqual(dudley_integral(cov, 0.4, 0.4), 0.0)
        with self.assertRaises(ValueError):
            dudley_integral(cov, 0.1, 2.0)
        with self.assertRaises(ValueError):
            dudley_integral(cov, 0.6, 0.5)

    def test_dudley_step_convention(self):
        """Test that each interval uses the entropy of its smaller knot."""
        eps = np.array([1.0, 0.5, 0.25])
        sizes = np.array([1, 2, 4])
        cov = CoveringCurve(epsilons=eps, sizes=sizes, entropies=np.log(sizes), raw_sizes=sizes)
        expected = 0.5 * np.sqrt(np.log(2)) + 0.25 * np.sqrt(np.log(4)) + 0.25 * np.sqrt(np.log(4))
        self.assertAlmostEqual(dudley_integral(cov, 0.0, 1.0), expected)

    def test_dudley_additive_and_monotone(self):
        """Test additivity over adjacent intervals and monotonicity in the entropy."""
        F = generate(GeneratorSpec(kind="interval_indicators", m=80, n=300, seed=2))
        cov = covering_curve(F, geometric_grid(1.0, 0.02, 15))
        whole = dudley_integral(cov, 0.01, 0.9)
        split = dudley_integral(cov, 0.01, 0.2) + dudley_integral(cov, 0.2, 0.9)
        self.assertAlmostEqual(whole, split)
        bigger = CoveringCurve(epsilons=cov.epsilons, sizes=cov.sizes * 2,
                               entropies=np.log(cov.sizes * 2), raw_sizes=cov.raw_sizes)
        self.assertGreater(dudley_integral(bigger, 0.01, 0.9), whole)
        self.assertEqual(truncated_dudley_bound(cov, 0.5, 0.3), 0.0)
        self.assertAlmostEqual(truncated_dudley_bound(cov, 0.1, 0.5), dudley_integral(cov, 0.1, 0.5))

    def test_sudakov_ratio(self):
        """Test the trivial and homogeneity properties."""
        logger.info("Testing Sudakov ratio...")
        single = covering_curve(SampledClass([[0.5, 0.5]]), [1.0, 0.1])
        self.assertEqual(sudakov_ratio(single, 0.3), 0.0)
        with self.assertRaises(ValueError):
            sudakov_ratio(single, 0.0)

        F = generate(GeneratorSpec(kind="ball", d=2, m=50, n=30, seed=6, range_checked=False))
        grid = geometric_grid(1.0, 0.05, 8)
        sup, _ = gaussian_sup_finite(F, 500, seed=1)
        ratio = sudakov_ratio(covering_curve(F, grid), sup)
        scaled = F.scaled(3.0)
        sup3, _ = gaussian_sup_finite(scaled, 500, seed=1)
        ratio3 = sudakov_ratio(covering_curve(scaled, 3.0 * grid), sup3)
        self.assertAlmostEqual(ratio, ratio3, places=9)


class TestChaining(unittest.TestCase):
    """Test suite for entropy-from-modulus sums and reference rates."""

    def test_chaining_examples(self):
        """Test the linear, zero and one-term sums."""
        knots = [2.0, 1.0, 0.5]
        linear = exact_curve(knots, knots)
        self.assertAlmostEqual(entropy_from_modulus(linear, 2), 6.0)
        self.assertEqual(entropy_from_modulus(exact_curve(knots, [0.0] * 3), 2), 0.0)
        self.assertEqual(entropy_from_modulus(linear, 0), 2.0)
        with self.assertRaises(ValueError):
            entropy_from_modulus(linear, 3)

    def test_separated_variant(self):
        """Test the second chaining sum on separated-subset moduli."""
        F = unit_diameter(generate(GeneratorSpec(kind="interval_indicators", m=30, n=200, seed=1)))
        self.assertAlmostEqual(F.diameter, 1.0)
        moduli = separated_moduli(F, 3, 200, seed=4)
        terms = chaining_terms(moduli, 3, variant="lif2")
        self.assertEqual(len(terms), 4)
        self.assertTrue(all(t >= 0 for t in terms))
        with self.assertRaises(ValueError):
            chaining_terms(moduli, 4, variant="lif2")
        with self.assertRaises(ValueError):
            chaining_terms(moduli[0], 1, variant="lif2")

    def test_rate_reference_examples(self):
        """Test plug-in values, linearity in K and the domain."""
        self.assertAlmostEqual(rate_reference(RateCurve("ex1_poly_covering", V=2.0), np.exp(-1.0)),
                               np.exp(-0.5))
        self.assertAlmostEqual(rate_reference(RateCurve("ex2_bigV", V=4.0), 0.25), 4.0)
        for kind, V in (("ex2_smallV", 1.0), ("ex2_Veq2", 2.0), ("hullentropy_ex1", 1.5),
                        ("hullentropy_ex2", 3.0)):
            one = rate_reference(RateCurve(kind, V=V), 0.1)
            two = rate_reference(RateCurve(kind, V=V, K=2.0), 0.1)
            self.assertAlmostEqual(two, 2.0 * one)
        with self.assertRaises(ValueError):
            rate_reference(RateCurve("ex2_Veq2"), 0.5)
        with self.assertRaises(ValueError):
            RateCurve("ex2_smallV", V=3.0)

    def test_chaining_dominance_and_exponent(self):
        """Test last-term dominance and the entropy exponent 2V/(2+V) for V = 2."""
        logger.info("Testing chaining dominance...")
        V = 2.0
        k_max = 30
        knots = [2.0 ** (1 - i) for i in range(k_max + 1)]
        mod = rate_modulus_curve(RateCurve("ex1_poly_covering", V=V), knots)
        terms = chaining_terms(mod, k_max)
        ratio = 2.0 ** (V / (2.0 + V))
        for i in range(3, k_max + 1):
            self.assertGreaterEqual(terms[i], ratio * terms[i - 1])
        ks = np.arange(8, k_max + 1)
        entropy = np.array([entropy_from_modulus(mod, k) ** 2 for k in ks])
        fit = fit_log_log(2.0 ** ks, entropy)
        self.assertAlmostEqual(fit.exponent, 2.0 * V / (2.0 + V), delta=0.2)


if __name__ == '__main__':
    unittest.main()

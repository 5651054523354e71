"""Tests for the synthetic class generators."""

import logging
import unittest

import numpy as np

from src.classes.classdata import pairwise_distances
from src.classes.generators import (GeneratorSpec, function_family, generate,
                                    random_convex_combination, sample_class_pair)
from src.classes.nets import covering_curve, geometric_grid
from src.config import ACCEPTANCE
from src.experiments.utils.rate_fit import fit_log_log

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


class TestGenerators(unittest.TestCase):
    """Test suite for generated classes."""

    def test_determinism(self):
        """Test that outputs depend only on the generator parameters."""
        logger.info("Testing generator determinism...")
        for kind in ("ball", "interval_indicators", "lattice_holder"):
            spec = GeneratorSpec(kind=kind, m=20, n=50, seed=11)
            np.testing.assert_array_equal(generate(spec).values, generate(spec).values)
        a = generate(GeneratorSpec(kind="ball", m=20, n=50, seed=1)).values
        b = generate(GeneratorSpec(kind="ball", m=20, n=50, seed=2)).values
        self.assertFalse(np.array_equal(a, b))

    def test_simple_fixtures(self):
        """Test singleton, two-point and segment classes."""
        F = generate(GeneratorSpec(kind="two_point", distance=1.0, n=10))
        self.assertEqual(F.m, 2)
        self.assertAlmostEqual(pairwise_distances(F)[0, 1], 1.0)
        self.assertEqual(generate(GeneratorSpec(kind="singleton", n=10)).m, 1)
        seg = generate(GeneratorSpec(kind="segment", m=5, n=10))
        np.testing.assert_allclose(seg.means, np.linspace(0.0, 1.0, 5))

    def test_interval_indicator_distances(self):
        """Test that squared distances approximate |s - t|."""
        logger.info("Testing interval indicators...")
        F = generate(GeneratorSpec(kind="interval_indicators", m=200, n=2000, seed=3))
        thresholds = np.linspace(0.0, 1.0, 200)
        sq = pairwise_distances(F) ** 2
        rng = np.random.default_rng(0)
        for _ in range(50):
            i, j = rng.integers(0, 200, size=2)
            self.assertLessEqual(abs(sq[i, j] - abs(thresholds[i] - thresholds[j])), 0.05)

    def test_ball_geometry(self):
        """Test range and norms of ball classes."""
        F = generate(GeneratorSpec(kind="ball", d=3, m=100, n=80, seed=4))
        self.assertTrue(F.range_checked)
        self.assertGreaterEqual(F.values.min(), 0.0)
        self.assertLessEqual(F.values.max(), 1.0)
        raw = generate(GeneratorSpec(kind="ball", d=3, m=100, n=80, seed=4, range_checked=False))
        self.assertLessEqual(raw.norms.max(), 1.0 + 1e-8)

    def test_lattice_increments(self):
        """Test the Holder step bound of lattice paths."""
        spec = GeneratorSpec(kind="lattice_holder", V=2.0, levels=64, m=10, n=100, seed=5)
        family, _ = function_family(spec)
        centers = (np.arange(64) + 0.5) / 64
        paths = family(centers)
        step = 0.5 * (1.0 / 64) ** 0.5
        self.assertLessEqual(np.abs(np.diff(paths, axis=1)).max(), step + 1e-12)
        self.assertGreaterEqual(paths.min(), 0.0)
        self.assertLessEqual(paths.max(), 1.0)

    def test_spec_validation(self):
        """Test infeasible parameters."""
        with self.assertRaises(ValueError):
            GeneratorSpec(kind="ball", d=10, n=5)
        with self.assertRaises(ValueError):
            GeneratorSpec(kind="lattice_holder", levels=2)
        with self.assertRaises(ValueError):
            GeneratorSpec(kind="two_point", distance=2.0)

    def test_class_pair_and_targets(self):
        """Test holdout evaluation and random hull targets."""
        spec = GeneratorSpec(kind="interval_indicators", m=10, n=40, seed=6)
        train, hold = sample_class_pair(spec, n_holdout=100)
        np.testing.assert_array_equal(train.values, generate(spec).values)
        self.assertEqual((hold.m, hold.n), (10, 100))
        combo = random_convex_combination(10, seed=1, support=3)
        self.assertEqual(int(np.count_nonzero(combo.weights)), 3)
        self.assertAlmostEqual(float(combo.weights.sum()), 1.0)

    @unittest.skipUnless(ACCEPTANCE, "acceptance-scale run")
    def test_ball_covering_slope(self):
        """Test the covering exponent of ball(d=2) over the resolved range."""
        logger.info("Testing ball covering slope...")
        F = generate(GeneratorSpec(kind="ball", d=2, m=400, n=400, seed=7))
        curve = covering_curve(F, geometric_grid(1.0, 0.02, 24))
        mask = curve.resolved_mask()
        fit = fit_log_log(1.0 / curve.epsilons[mask], curve.sizes[mask].astype(float))
        logger.info(f"ball(d=2) covering slope {fit.exponent:.3f}")
        self.assertGreaterEqual(fit.exponent, 1.6)
        self.assertLessEqual(fit.exponent, 2.4)


if __name__ == '__main__':
    unittest.main()

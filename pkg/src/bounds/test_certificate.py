"""Tests for certificates, constants profiles and calibration."""

import logging
import tempfile
import unittest
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.bounds.certificate import Certificate, calibrate_constant, certificate
from src.bounds.fixed_point import FixedPointResult
from src.bounds.profile import ConstantsProfile, load_profile, save_profile
from src.config import DEFAULT_PROFILE_PATH

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


class TestCertificate(unittest.TestCase):
    """Test suite for certificate assembly."""

    def setUp(self):
        """Set up fixtures."""
        self.profile = ConstantsProfile()

    def test_zero_rate_example(self):
        """Test (1 + log log 100) / 100 with K = 1."""
        logger.info("Testing certificate arithmetic...")
        cert = certificate("G", 1.0, 100, 0.0, self.profile)
        self.assertAlmostEqual(cert.bound, (1.0 + np.log(np.log(100.0))) / 100.0)
        self.assertAlmostEqual(cert.bound, 0.0253, places=4)
        self.assertEqual(cert.form, "corollary")
        self.assertAlmostEqual(cert.recompute(), cert.bound)

    def test_linear_in_K(self):
        """Test that the bound scales with K and accepts fixed-point results."""
        result = FixedPointResult(value=0.04, equation="Uo", iterations=3, residual=0.0)
        base = certificate("G", 2.0, 500, result, self.profile, seed=3)
        scaled = certificate("G", 2.0, 500, result, self.profile.with_constant("K_thm", 3.0, "test"))
        self.assertAlmostEqual(scaled.bound, 3.0 * base.bound)
        self.assertEqual(base.r_hat, 0.04)
        self.assertEqual(base.seed, 3)
        self.assertEqual(scaled.profile["notes"]["K_thm"], "test")

    def test_theorem_form(self):
        """Test the empirical term of the theorem form."""
        cert = certificate("G", 1.0, 100, 0.01, self.profile, empirical_mean=0.2)
        self.assertEqual(cert.form, "theorem")
        self.assertAlmostEqual(cert.bound, 0.2 + 0.01 + cert.r0)
        restored = Certificate.model_validate_json(cert.model_dump_json())
        self.assertAlmostEqual(restored.recompute(), cert.bound)

    def test_invalid_inputs(self):
        """Test guards on n, t and r_hat."""
        with self.assertRaises(ValueError):
            certificate("G", 1.0, 2, 0.0, self.profile)
        with self.assertRaises(ValueError):
            certificate("G", 0.0, 100, 0.0, self.profile)
        with self.assertRaises(ValueError):
            certificate("G", 1.0, 100, -0.1, self.profile)


class TestCalibration(unittest.TestCase):
    """Test suite for constant calibration."""

    def test_coverage_reached(self):
        """Test that the calibrated K covers the target fraction and no less."""
        logger.info("Testing calibration...")
        rng = np.random.default_rng(3)
        base = rng.uniform(0.01, 0.1, size=400)
        risks = base * rng.uniform(0.0, 2.0, size=400)
        K = calibrate_constant(risks, base, target_coverage=0.95)
        covered = np.mean(risks <= K * base * (1.0 + 1e-12))
        self.assertGreaterEqual(covered, 0.95)
        smaller = np.mean(risks <= 0.999 * K * base)
        self.assertLess(smaller, 0.95)

    def test_guards(self):
        """Test trial count, shapes and unreachable targets."""
        with self.assertRaises(ValueError):
            calibrate_constant(np.ones(50), np.ones(50))
        with self.assertRaises(ValueError):
            calibrate_constant(np.ones(200), np.ones(201))
        with self.assertRaises(ValueError):
            calibrate_constant(np.ones(200), np.zeros(200), target_coverage=1.0)
        self.assertGreater(calibrate_constant(np.zeros(200), np.zeros(200)), 0.0)


class TestProfile(unittest.TestCase):
    """Test suite for constants profiles."""

    def test_validation(self):
        """Test that constants must be positive and keys known."""
        with self.assertRaises(ValidationError):
            ConstantsProfile(K_1=0.0)
        with self.assertRaises(ValueError):
            ConstantsProfile().with_constant("K_9", 2.0, "bad")

    def test_save_and_load(self):
        """Test persistence and the shipped default profile."""
        profile = ConstantsProfile(name="fitted").with_constant("K_thm", 4.5, "calibrated")
        with tempfile.TemporaryDirectory() as tmp:
            path = save_profile(profile, Path(tmp) / "p" / "profile.json")
            loaded = load_profile(path)
            self.assertEqual(loaded, profile)
            with self.assertRaises(FileNotFoundError):
                load_profile(Path(tmp) / "missing.json")
        if DEFAULT_PROFILE_PATH.exists():
            default = load_profile()
            self.assertEqual(default.K_thm, 1.0)


if __name__ == '__main__':
    unittest.main()

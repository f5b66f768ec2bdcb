"""Loss-family values, derivatives, weights, and axioms."""

import numpy as np
import pytest

from robreg import RhoKernel, verify_rho_axioms
from robreg.exceptions import KernelCapabilityError

from oracles import central_diff, fd_step

ALL_FAMILIES = ("bisquare", "expsquared", "quartic")
SMOOTH = ("expsquared", "quartic")


def away_from_edges(grid, kernel, margin=1e-3):
    if not kernel.compact:
        return np.ones_like(grid, dtype=bool)
    return np.abs(np.abs(grid) - kernel.c) > margin


class TestBisquareValues:
    def test_rho_at_zero(self):
        assert RhoKernel("bisquare", 1.0).rho(0.0) == 0.0

    def test_rho_hand_value(self):
        # 1 - (1 - 0.25)^3 evaluated by hand
        assert RhoKernel("bisquare", 1.0).rho(0.5) == pytest.approx(0.578125, abs=1e-15)

    def test_rho_saturates(self):
        k = RhoKernel("bisquare", 1.0)
        assert k.rho(2.0) == 1.0
        assert k.rho(-1.0) == 1.0

    def test_psi_hand_values(self):
        k = RhoKernel("bisquare", 1.0)
        assert k.psi(0.0) == 0.0
        # 6 * 0.5 * (1 - 0.25)^2 by hand differentiation
        assert k.psi(0.5) == pytest.approx(1.6875, abs=1e-15)
        assert k.psi(1.5) == 0.0

    def test_weight_limit_and_symmetry(self):
        k = RhoKernel("bisquare", 1.0)
        assert k.weight(0.0) == pytest.approx(6.0, abs=1e-12)
        assert k.weight(1.0 - 1e-9) == pytest.approx(0.0, abs=1e-8)
        xs = np.linspace(0.05, 3.0, 50)
        np.testing.assert_allclose(k.weight(xs), k.weight(-xs), rtol=0, atol=0)

    def test_weight_matches_psi_over_x(self):
        k = RhoKernel("bisquare", 1.547)
        xs = np.linspace(0.01, 2.0, 200)
        np.testing.assert_allclose(k.weight(xs), k.psi(xs) / xs, rtol=1e-12)

    def test_psi_double_prime_refused(self):
        with pytest.raises(KernelCapabilityError):
            RhoKernel("bisquare", 1.0).psi_double_prime(0.3)


class TestDerivativesAgainstFiniteDifferences:
    """Closed forms locked by central differences away from support edges."""

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_psi_is_rho_derivative(self, family):
        rng = np.random.default_rng(101)
        for c in rng.uniform(0.5, 5.0, size=4):
            k = RhoKernel(family, float(c))
            x = np.linspace(-3.0 * c, 3.0 * c, 2001)
            x = x[away_from_edges(x, k)]
            fd = central_diff(k.rho, x, fd_step(x))
            err = np.abs(k.psi(x) - fd) / (1.0 + np.abs(k.psi(x)))
            assert err.max() < 1e-6

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_psi_prime_is_psi_derivative(self, family):
        rng = np.random.default_rng(102)
        for c in rng.uniform(0.5, 5.0, size=4):
            k = RhoKernel(family, float(c))
            x = np.linspace(-3.0 * c, 3.0 * c, 2001)
            x = x[away_from_edges(x, k)]
            fd = central_diff(k.psi, x, fd_step(x))
            err = np.abs(k.psi_prime(x) - fd) / (1.0 + np.abs(k.psi_prime(x)))
            assert err.max() < 1e-6

    @pytest.mark.parametrize("family", SMOOTH)
    def test_psi_double_prime_is_psi_prime_derivative(self, family):
        rng = np.random.default_rng(103)
        for c in rng.uniform(0.5, 5.0, size=4):
            k = RhoKernel(family, float(c))
            x = np.linspace(-3.0 * c, 3.0 * c, 2001)
            x = x[away_from_edges(x, k)]
            fd = central_diff(k.psi_prime, x, fd_step(x))
            err = np.abs(k.psi_double_prime(x) - fd) / (1.0 + np.abs(k.psi_double_prime(x)))
            assert err.max() < 1e-6


class TestStructuralProperties:
    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_range_and_monotonicity(self, family):
        k = RhoKernel(family, 2.3)
        xs = np.linspace(0.0, 20.0, 4001)
        vals = k.rho(xs)
        assert vals.min() >= 0.0 and vals.max() <= 1.0
        assert np.all(np.diff(vals) >= -1e-14)

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_x_psi_bounded_on_wide_grid(self, family):
        k = RhoKernel(family, 1.7)
        xs = np.geomspace(1e-3, 1e6, 2000)
        xs = np.concatenate([-xs[::-1], xs])
        vals = np.abs(xs * k.psi(xs))
        # family-specific bound: |x psi(x)| <= sup over support, finite
        assert np.all(np.isfinite(vals))
        assert vals.max() <= 10.0  # generous cap, all three families stay below

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_psi_odd(self, family):
        k = RhoKernel(family, 0.9)
        xs = np.linspace(0.0, 4.0, 500)
        np.testing.assert_allclose(k.psi(-xs), -k.psi(xs), rtol=0, atol=1e-15)

    def test_compact_support_flags(self):
        assert RhoKernel("bisquare", 2.0).compact
        assert RhoKernel("quartic", 2.0).compact
        assert not RhoKernel("expsquared", 2.0).compact

    def test_nonfinite_rejected(self):
        k = RhoKernel("bisquare", 1.0)
        with pytest.raises(ValueError):
            k.rho(np.nan)
        with pytest.raises(ValueError):
            k.psi(np.array([1.0, np.inf]))

    def test_bad_construction(self):
        with pytest.raises(ValueError):
            RhoKernel("huber", 1.0)
        with pytest.raises(ValueError):
            RhoKernel("bisquare", -1.0)
        with pytest.raises(ValueError):
            RhoKernel("bisquare", np.inf)


class TestAxiomVerifier:
    def test_bisquare_passes(self):
        grid = np.linspace(-3.0, 3.0, 801)
        assert verify_rho_axioms(RhoKernel("bisquare", 1.0), grid) == []

    def test_expsquared_passes(self):
        grid = np.linspace(-5.0, 5.0, 801)
        assert verify_rho_axioms(RhoKernel("expsquared", 1.0), grid) == []

    def test_quartic_passes(self):
        grid = np.linspace(-4.0, 4.0, 801)
        assert verify_rho_axioms(RhoKernel("quartic", 1.3), grid) == []

    def test_unbounded_fake_flagged(self):
        class Linear:
            def rho(self, x):
                return np.asarray(x, dtype=float)

        report = verify_rho_axioms(Linear(), np.linspace(-3.0, 3.0, 101))
        assert any("bounded" in item for item in report)

    def test_flat_fake_flagged(self):
        class Flat:
            def rho(self, x):
                x = np.asarray(x, dtype=float)
                return np.where(np.abs(x) > 1.0, 0.5, 0.0) * np.abs(x) / np.maximum(np.abs(x), 1e-12)

        report = verify_rho_axioms(Flat(), np.linspace(-3.0, 3.0, 101))
        assert report  # plateau below sup violates strict increase

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            verify_rho_axioms(RhoKernel("bisquare", 1.0), [])


class TestSerialization:
    def test_round_trip(self):
        k = RhoKernel("bisquare", 1.547)
        assert RhoKernel.parse(k.serialize()) == k

    def test_parse_example(self):
        k = RhoKernel.parse("bisquare:1.547")
        assert k.family == "bisquare" and k.c == 1.547

    def test_parse_garbage(self):
        with pytest.raises(ValueError):
            RhoKernel.parse("bisquare")
        with pytest.raises(ValueError):
            RhoKernel.parse("bisquare:abc")

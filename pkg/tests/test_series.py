"""Tests for truncated series arithmetic and the network series solver."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core_classes import WheelsClass, parse_class_spec
from src.errors import CoefficientOverflow
from src.series import (
    TruncatedSeries,
    biconnected_edge_derivative,
    compose_core,
    estimate_radius,
    network_series_residuals,
    series_evaluate,
    series_exp,
    series_log,
    series_mul,
    solve_network_series,
)
from src.singularity import locate_singularity, solve_gf_values


@st.composite
def positive_series(draw, order=8):
    """Series with a positive constant term and small higher coefficients."""
    head = draw(st.floats(min_value=0.5, max_value=3.0))
    tail = draw(st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=order, max_size=order))
    return TruncatedSeries(np.array([head] + tail))


class TestTruncatedSeries:
    """Tests for TruncatedSeries arithmetic."""

    def test_constructors(self):
        assert TruncatedSeries.zeros(3).order == 3
        assert TruncatedSeries.constant(2.0, 2).coefficient(0) == 2.0
        x = TruncatedSeries.variable(4)
        assert x.coefficient(1) == 1.0
        assert x.coefficient(2) == 0.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TruncatedSeries(np.array([]))

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            TruncatedSeries(np.ones(3), scale=0.0)

    def test_coefficient_beyond_order(self):
        with pytest.raises(IndexError):
            TruncatedSeries.zeros(2).coefficient(3)

    def test_scaled_coefficients(self):
        series = TruncatedSeries(np.array([1.0, 0.5, 0.25]), scale=0.5)
        assert series.coefficient(1) == pytest.approx(1.0)
        assert series.coefficient(2) == pytest.approx(1.0)
        assert series.log_coefficient(2) == pytest.approx(0.0, abs=1e-15)

    def test_scale_mismatch(self):
        with pytest.raises(ValueError):
            TruncatedSeries(np.ones(3), 1.0) + TruncatedSeries(np.ones(3), 0.5)

    def test_mul_geometric(self):
        one_plus_x = TruncatedSeries(np.array([1.0, 1.0, 0.0, 0.0]))
        square = series_mul(one_plus_x, one_plus_x)
        assert list(square.coeffs) == [1.0, 2.0, 1.0, 0.0]

    def test_exp_of_variable(self):
        exp_x = series_exp(TruncatedSeries.variable(8))
        for n in range(9):
            assert exp_x.coefficient(n) == pytest.approx(1 / math.factorial(n))

    def test_log_of_one_plus_x(self):
        log_series = series_log(TruncatedSeries(np.array([1.0, 1.0, 0, 0, 0, 0])))
        for n in range(1, 6):
            assert log_series.coefficient(n) == pytest.approx((-1) ** (n + 1) / n)

    def test_log_needs_positive_constant(self):
        with pytest.raises(ValueError):
            series_log(TruncatedSeries(np.array([0.0, 1.0])))

    def test_evaluate(self):
        series = TruncatedSeries(np.array([1.0, 2.0, 3.0]))
        assert series_evaluate(series, 0.5) == pytest.approx(1 + 1 + 0.75)

    def test_egf_count(self):
        series = TruncatedSeries(np.array([1.0, 2.0, 8.0]))
        assert series.egf_count(2) == pytest.approx(16.0)

    @pytest.mark.property
    @given(positive_series())
    @settings(max_examples=60, deadline=None)
    def test_exp_log_inverse(self, series):
        """Property: exp(log(a)) recovers a."""
        recovered = series_exp(series_log(series))
        assert np.allclose(recovered.coeffs, series.coeffs, rtol=1e-9, atol=1e-9)

    @pytest.mark.property
    @given(positive_series(), positive_series())
    @settings(max_examples=60, deadline=None)
    def test_exp_turns_sums_into_products(self, a, b):
        """Property: exp(a + b) = exp(a) exp(b)."""
        left = series_exp(a + b)
        right = series_exp(a) * series_exp(b)
        assert np.allclose(left.coeffs, right.coeffs, rtol=1e-9, atol=1e-9)


class TestNetworkSeries:
    """Tests for the network series solver."""

    def test_rejects_bad_y(self):
        with pytest.raises(ValueError):
            solve_network_series(WheelsClass(), 0.0, order=4)

    def test_wheel_counts(self):
        """One network on zero vertices, two on one, sixteen on two labeled vertices."""
        solved = solve_network_series(WheelsClass(), 1.0, order=6, scale=1.0)
        assert solved.N.egf_count(0) == pytest.approx(1.0)
        assert solved.N.egf_count(1) == pytest.approx(2.0)
        assert solved.N.egf_count(2) == pytest.approx(16.0)
        assert solved.N.egf_count(3) == pytest.approx(308.0)
        assert solved.N.egf_count(4) == pytest.approx(9868.0)

    def test_fixed_graphs_add_to_wheel_counts(self):
        """K33 and the prism add 12 and 72 networks on four labeled vertices."""
        solved = solve_network_series(parse_class_spec("wheels+k33+prism"), 1.0, order=4, scale=1.0)
        assert solved.N.egf_count(3) == pytest.approx(308.0)
        assert solved.N.egf_count(4) == pytest.approx(9952.0)

    def test_small_coefficients_in_y(self):
        """[x]N = y² + y³: the path and the path with the pole edge."""
        y = 2.0
        solved = solve_network_series(WheelsClass(), y, order=3, scale=1.0)
        assert solved.N.coefficient(0) == pytest.approx(y)
        assert solved.N.coefficient(1) == pytest.approx(y ** 2 + y ** 3)
        assert solved.S.coefficient(1) == pytest.approx(y ** 2)
        assert solved.P.coefficient(1) == pytest.approx(y ** 3)
        assert solved.H.coefficient(1) == 0.0

    def test_residuals_vanish(self):
        core_class = parse_class_spec("wheels+k33+prism")
        solved = solve_network_series(core_class, 1.0, order=40, scale=1.0)
        residuals = network_series_residuals(core_class, solved)
        assert set(residuals) == {"sum", "series", "parallel", "core"}
        assert max(residuals.values()) < 1e-9

    def test_scale_does_not_change_coefficients(self):
        core_class = WheelsClass()
        plain = solve_network_series(core_class, 1.0, order=20, scale=1.0)
        scaled = solve_network_series(core_class, 1.0, order=20, scale=0.1)
        for n in range(21):
            assert scaled.N.coefficient(n) == pytest.approx(plain.N.coefficient(n), rel=1e-9)

    def test_high_order_stays_finite(self):
        solved = solve_network_series(WheelsClass(), 1.0, order=120)
        assert np.all(np.isfinite(solved.N.coeffs))
        assert solved.N.log_coefficient(120) > 0

    def test_series_matches_scalar_solver(self):
        core_class = WheelsClass()
        x = 0.04
        solved = solve_network_series(core_class, 1.0, order=120)
        gf = solve_gf_values(core_class, x, 1.0)
        assert series_evaluate(solved.N, x) == pytest.approx(gf.N, rel=1e-9)
        assert series_evaluate(solved.H, x) == pytest.approx(gf.H, rel=1e-8)

    def test_compose_core_matches_h(self):
        core_class = WheelsClass()
        solved = solve_network_series(core_class, 1.0, order=15, scale=1.0)
        composed = compose_core(core_class, solved.N)
        assert np.allclose(composed.coeffs, solved.H.coeffs, rtol=1e-12, atol=1e-15)

    def test_fixed_graph_enters_at_its_size(self):
        """K33 first contributes to H at x^4 with 0.25 y^8 (one z per edge of the core network)."""
        solved = solve_network_series(parse_class_spec("k33"), 1.0, order=5, scale=1.0)
        for n in range(4):
            assert solved.H.coefficient(n) == 0.0
        assert solved.H.coefficient(4) == pytest.approx(0.25)


class TestBiconnectedTransfer:
    """Tests for the network to biconnected-graph counting identity."""

    def test_edge_rooted_biconnected_coefficients(self):
        solved = solve_network_series(WheelsClass(), 1.0, order=6, scale=1.0)
        derivative = biconnected_edge_derivative(solved)
        assert derivative.coefficient(0) == 0.0
        assert derivative.coefficient(1) == 0.0
        assert derivative.coefficient(2) == pytest.approx(0.5)
        assert derivative.coefficient(3) == pytest.approx(0.5)
        assert derivative.coefficient(4) == pytest.approx(2.0)
        # 48 edge-rooted labeled graphs on four vertices: 4!·2
        assert derivative.egf_count(4) == pytest.approx(48.0)


class PowerSumTerms:
    """T̄(x, z) = x² (z + z² + ... + z^D), all coefficients 1."""

    def __init__(self, max_degree):
        self.max_degree = max_degree

    def tbar_log_terms(self, k):
        return {d: 0.0 for d in range(1, self.max_degree + 1)} if k == 2 else {}


def powers_by_products(series, max_degree):
    """N⁰ .. N^D built with repeated series_mul."""
    powers = [TruncatedSeries.constant(1.0, series.order, series.scale)]
    for _ in range(max_degree):
        powers.append(series_mul(powers[-1], series))
    return powers


def core_by_products(core_class, n_series):
    """T̄(x, N(x)) summed term by term from series_mul powers."""
    order = n_series.order
    max_degree = max((d for k in range(2, order + 1) for d in core_class.tbar_log_terms(k)), default=0)
    powers = powers_by_products(n_series, max_degree)
    out = np.zeros(order + 1)
    for k in range(2, order + 1):
        for degree, log_coeff in core_class.tbar_log_terms(k).items():
            out[k:] += math.exp(log_coeff) * powers[degree].coeffs[: order + 1 - k]
    return out


class TestComposeCore:
    """compose_core against powers built with series_mul."""

    def test_powers_of_one_plus_x(self):
        one_plus_x = TruncatedSeries(np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
        composed = compose_core(PowerSumTerms(3), one_plus_x)
        # x² ((1+x) + (1+x)² + (1+x)³) = x² (3 + 6x + 4x² + x³)
        assert list(composed.coeffs) == pytest.approx([0.0, 0.0, 3.0, 6.0, 4.0, 1.0])

    @pytest.mark.property
    @given(positive_series(order=7), st.integers(min_value=1, max_value=6))
    @settings(max_examples=40, deadline=None)
    def test_matches_products(self, series, max_degree):
        """Property: the power table agrees with repeated multiplication."""
        composed = compose_core(PowerSumTerms(max_degree), series)
        expected = core_by_products(PowerSumTerms(max_degree), series)
        assert np.allclose(composed.coeffs, expected, rtol=1e-9, atol=1e-9)

    def test_solved_core_series_matches_products(self):
        core_class = parse_class_spec("wheels+k33+prism")
        solved = solve_network_series(core_class, 1.0, order=12, scale=1.0)
        expected = core_by_products(core_class, solved.N)
        assert np.allclose(solved.H.coeffs, expected, rtol=1e-10, atol=1e-12)
        # N = y + S + P + H with P rebuilt from series_exp
        u = solved.S + solved.H
        parallel = (series_exp(u) - 1.0) * 2.0 - u
        assert np.allclose(solved.P.coeffs, parallel.coeffs, rtol=1e-10, atol=1e-12)


class TestHighOrder:
    """Coefficients far beyond floating-point range at order 400."""

    @pytest.fixture(scope="class")
    def solved(self):
        return solve_network_series(WheelsClass(), 1.0, order=400)

    def test_scaled_coefficients_stay_finite(self, solved):
        assert np.all(np.isfinite(solved.N.coeffs))
        assert np.all(solved.N.coeffs[1:] > 0)

    def test_unscaled_values_raise(self, solved):
        with pytest.raises(CoefficientOverflow):
            solved.N.egf_count(400)
        with pytest.raises(CoefficientOverflow):
            solved.N.coefficient(400)

    def test_log_forms(self, solved):
        log_count = solved.N.log_egf_count(400)
        assert math.isfinite(log_count)
        assert log_count == pytest.approx(solved.N.log_coefficient(400) + math.lgamma(401))
        assert solved.N.egf_count(20) == pytest.approx(math.exp(solved.N.log_egf_count(20)), rel=1e-9)

    def test_radius_estimate(self, solved):
        rho = locate_singularity(WheelsClass(), 1.0).rho_n
        assert estimate_radius(solved.N) == pytest.approx(rho, rel=1e-3)

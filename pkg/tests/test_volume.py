"""Closed-form ball volumes against exact, quadrature and sampling oracles.

For n >= 2k the squared sines x_i = sin^2(theta_i) of two uniform points of
G(k, n) have joint density proportional to prod x_i^(n-2k) * Vandermonde(x)^2
on [0, 1]^k.  The density is a polynomial, so ball volumes over the cube
(projective-2) and over the simplex sum x_i <= delta^2 <= 1 (projective-F)
have exact rational values, computed here with sympy.
"""
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st
from scipy import integrate

from grassmimo.grassmann import pair_distances, sample_uniform_batch
from grassmimo.rng import SeededRng
from grassmimo.volume import (
    Metric,
    Unsupported,
    VolumeQuery,
    correlation_cdf,
    correlation_pdf,
    dualize,
    expected_sq_correlation,
    max_radius,
    volume,
    volume_curve,
    volume_k1,
    volume_k2_pf,
    volume_p2_general,
    volume_pf_general_small_delta,
)


@lru_cache(maxsize=None)
def density_terms(k, n):
    """Monomial exponents and integer coefficients of the unnormalized density."""
    xs = sympy.symbols(f"x0:{k}")
    vdm = sympy.prod([(xs[i] - xs[j]) for i in range(k) for j in range(i + 1, k)])
    poly = sympy.Poly(sympy.expand(vdm ** 2 * sympy.prod([x ** (n - 2 * k) for x in xs])), *xs)
    return [(tuple(e), int(c)) for e, c in poly.terms()]


def _cube(terms):
    return sum(Fraction(c) / math.prod(a + 1 for a in e) for e, c in terms)


def exact_pf_coefficient(k, n):
    """Volume / delta^(2kn-2k^2) for the projective-F ball with delta <= 1 (Dirichlet integrals)."""
    terms = density_terms(k, n)
    simplex = sum(Fraction(c * math.prod(math.factorial(a) for a in e),
                           math.factorial(sum(e) + k)) for e, c in terms)
    return simplex / _cube(terms)


def exact_p2_power(k, n):
    """(coefficient, exponent of delta) of the projective-2 ball volume.

    The ball is the cube [0, delta^2]^k; each monomial integrates to
    ``prod t^(a_i+1)/(a_i+1)`` with t = delta^2.
    """
    terms = density_terms(k, n)
    exponents = {2 * (sum(e) + k) for e, _ in terms}
    assert len(exponents) == 1
    return _cube(terms) / _cube(terms), exponents.pop()


def k2_density_volume(n, delta):
    """P(x1 + x2 <= delta^2) under the G(2, n) squared-sine density, by 2-D quadrature."""
    f = lambda y, x: (x * y) ** (n - 4) * (x - y) ** 2
    z, _ = integrate.dblquad(f, 0, 1, 0, 1, epsabs=0, epsrel=1e-12)
    t = delta * delta
    num, _ = integrate.dblquad(f, 0, min(1.0, t), 0,
                               lambda x: min(1.0, max(0.0, t - x)), epsabs=0, epsrel=1e-12)
    return num / z


def empirical(k, n, metric, trials, seed):
    rng = SeededRng(seed, k * 1000 + n)
    pf, p2 = pair_distances(sample_uniform_batch(n, k, trials, rng),
                            sample_uniform_batch(n, k, trials, rng))
    return np.sort(pf if Metric.parse(metric) is Metric.PROJECTIVE_F else p2)


def ecdf(sorted_d, deltas):
    return np.searchsorted(sorted_d, deltas, side="right") / sorted_d.size


DKW99_1E5 = math.sqrt(math.log(2 / 0.01) / (2 * 100_000))


class TestExamples:
    def test_dispatcher(self):
        for metric in ("pf", "p2"):
            assert volume(VolumeQuery(1, 4, 0.5, metric)) == pytest.approx(0.015625, rel=1e-14)
        assert volume(VolumeQuery(3, 4, 0.9, "p2")) == pytest.approx(0.531441, rel=1e-14)
        assert volume(VolumeQuery(2, 4, math.sqrt(2), "pf")) == 1.0

    def test_k1(self):
        assert volume_k1(2, 0.6) == pytest.approx(0.36, rel=1e-14)
        assert volume_k1(9, 1.0) == 1.0
        assert volume_k1(64, 0.5) == pytest.approx(2.0 ** -126, rel=1e-13)

    def test_correlation(self):
        assert correlation_cdf(2, 0.6) == pytest.approx(0.36, rel=1e-14)
        assert correlation_cdf(7, 1.0) == 1.0
        assert correlation_cdf(4, 0.5) == pytest.approx(0.578125, rel=1e-14)
        assert correlation_pdf(2, 0.3) == pytest.approx(0.6, rel=1e-14)
        assert correlation_pdf(5, 1.0) == 0.0
        for n in [2, 3, 5, 17, 64, 128]:
            val, _ = integrate.quad(lambda x: correlation_pdf(n, x), 0, 1, epsabs=1e-13)
            assert val == pytest.approx(1.0, abs=1e-10)
        with pytest.raises(ValueError):
            correlation_cdf(3, 1.1)
        with pytest.raises(ValueError):
            correlation_pdf(3, -0.1)

    def test_expected_sq_correlation(self):
        assert expected_sq_correlation(64) == pytest.approx(1 / 64, rel=1e-14)
        assert expected_sq_correlation(2) == pytest.approx(0.5, rel=1e-14)
        assert expected_sq_correlation(16) == pytest.approx(0.0625, rel=1e-14)
        for n in range(2, 200):
            assert expected_sq_correlation(n) == pytest.approx(1 / n, rel=1e-12)

    def test_expected_sq_correlation_sampled(self):
        v = sample_uniform_batch(16, 1, 200_000, SeededRng(21))[..., 0]
        x2 = np.abs(np.sum(v[0::2].conj() * v[1::2], axis=1)) ** 2
        assert abs(x2.mean() - 1 / 16) <= 3 * x2.std() / math.sqrt(x2.size)

    def test_k2_pf(self):
        for n in range(4, 65):
            assert volume_k2_pf(n, math.sqrt(2)) == pytest.approx(1.0, abs=1e-9)
        assert volume_k2_pf(4, 1.0) == pytest.approx(0.5, rel=1e-14)

    def test_p2_general(self):
        assert volume_p2_general(2, 4, 0.8) == pytest.approx(0.8 ** 8, rel=1e-14)
        assert volume_p2_general(3, 7, 1.0) == 1.0
        assert volume_p2_general(3, 8, 0.9) == pytest.approx(0.9 ** 30, rel=1e-13)
        assert volume_p2_general(3, 8, 0.9) == pytest.approx(0.042391, rel=1e-4)

    def test_pf_general_small_delta(self):
        assert volume_pf_general_small_delta(2, 4, 1.0) == pytest.approx(0.5, rel=1e-13)
        for n in range(2, 30):
            for d in (0.1, 0.5, 0.93):
                assert volume_pf_general_small_delta(1, n, d) == pytest.approx(
                    volume_k1(n, d), rel=1e-12)
        assert volume_pf_general_small_delta(3, 6, 0.5) == pytest.approx(0.5 ** 18 / 42, rel=1e-12)
        with pytest.raises(Unsupported):
            volume_pf_general_small_delta(3, 8, 1.2)

    def test_dualize(self):
        assert dualize(3, 4) == (1, 4)
        assert dualize(2, 4) == (2, 4)
        assert dualize(5, 8) == (3, 8)
        assert dualize(4, 4) == (0, 4)


class TestExactOracles:
    @pytest.mark.parametrize("k,n", [(1, 2), (1, 5), (2, 4), (2, 5), (2, 9), (3, 6), (3, 7),
                                     (3, 8), (4, 8), (4, 9)])
    def test_pf_small_delta_coefficient(self, k, n):
        exact = float(exact_pf_coefficient(k, n))
        assert volume_pf_general_small_delta(k, n, 1.0) == pytest.approx(exact, rel=1e-12)
        assert volume(VolumeQuery(k, n, 0.7, "pf")) == pytest.approx(
            exact * 0.7 ** (2 * k * n - 2 * k * k), rel=1e-12)

    def test_pf_coefficient_k3_n6(self):
        assert exact_pf_coefficient(3, 6) == Fraction(1, 42)

    @pytest.mark.parametrize("k,n", [(2, 4), (2, 7), (3, 6), (3, 8), (4, 9)])
    def test_p2_is_a_pure_power(self, k, n):
        assert exact_p2_power(k, n) == (1, 2 * k * n - 2 * k * k)
        for d in (0.2, 0.6, 0.95):
            assert volume(VolumeQuery(k, n, d, "p2")) == pytest.approx(
                d ** (2 * k * n - 2 * k * k), rel=1e-12)

    @pytest.mark.parametrize("n", [4, 5, 6, 8, 11])
    @pytest.mark.parametrize("delta", [0.3, 0.7, 0.95, 1.0, 1.05, 1.2, 1.35, 1.41])
    def test_k2_pf_matches_quadrature(self, n, delta):
        assert volume_k2_pf(n, delta) == pytest.approx(k2_density_volume(n, delta),
                                                       rel=1e-9, abs=1e-15)

    @pytest.mark.parametrize("n,delta,expected", [
        (4, 1.2, 0.95082752),
        (6, 1.2, 0.6700407948640259),
        (30, 1.2, 2.74702611857717e-06),
        (60, 1.3, 2.02370612391523e-06),
        (12, 1.05, 0.000419133691219646),
        (30, 0.9, 2.84427747261096e-20),
    ])
    def test_k2_pf_frozen_high_precision_values(self, n, delta, expected):
        # reference values from 40-digit quadrature of the squared-sine density
        assert volume_k2_pf(n, delta) == pytest.approx(expected, rel=1e-11)


class TestStructure:
    @pytest.mark.parametrize("n", range(4, 65))
    def test_k2_branch_continuity(self, n):
        below = volume_k2_pf(n, 1.0)
        above = volume_k2_pf(n, math.nextafter(1.0, 2.0))
        assert abs(above - below) <= 1e-10 * below

    @pytest.mark.parametrize("n", range(4, 33))
    def test_k2_specializes_general_formula(self, n):
        for d in np.linspace(0.05, 1.0, 20):
            assert volume_k2_pf(n, d) == pytest.approx(
                volume_pf_general_small_delta(2, n, d), rel=1e-10)

    @pytest.mark.parametrize("metric", ["pf", "p2"])
    @pytest.mark.parametrize("k,n", [(1, 2), (1, 9), (2, 4), (2, 13), (2, 64), (3, 6), (3, 8),
                                     (5, 8), (6, 8), (4, 64), (7, 9)])
    def test_monotone_and_bounded(self, k, n, metric):
        kd = min(k, n - k)
        top = max_radius(k, n, metric)
        if metric == "pf" and kd >= 3:
            top = 1.0
        vals = volume_curve(k, n, np.linspace(0, top, 200), metric)
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == 0.0
        assert np.all((vals >= 0) & (vals <= 1))

    @pytest.mark.parametrize("metric", ["pf", "p2"])
    @pytest.mark.parametrize("k,n", [(1, 2), (2, 4), (2, 9), (3, 6), (5, 8), (7, 8)])
    def test_boundary_values(self, k, n, metric):
        top = max_radius(k, n, metric)
        assert volume(VolumeQuery(k, n, 0.0, metric)) == 0.0
        assert volume(VolumeQuery(k, n, top, metric)) == 1.0
        assert volume(VolumeQuery(k, n, top + 0.5, metric)) == 1.0

    def test_point_manifold(self):
        for d in (0.0, 0.3, 5.0):
            assert volume(VolumeQuery(3, 3, d, "pf")) == 1.0
            assert volume(VolumeQuery(3, 3, d, "p2")) == 1.0

    @pytest.mark.parametrize("k,n", [(3, 8), (5, 8), (4, 8), (3, 7)])
    def test_unsupported_region(self, k, n):
        with pytest.raises(Unsupported):
            volume(VolumeQuery(k, n, 1.2, "pf"))
        # still fine for delta <= 1 and for the spectral metric
        volume(VolumeQuery(k, n, 1.0, "pf"))
        volume(VolumeQuery(k, n, 0.99, "p2"))

    def test_duality_is_exact(self):
        for k, n in [(3, 4), (5, 8), (6, 9)]:
            for metric in ("pf", "p2"):
                for d in (0.2, 0.5, 0.9):
                    assert volume(VolumeQuery(k, n, d, metric)) == volume(
                        VolumeQuery(n - k, n, d, metric))

    @pytest.mark.parametrize("bad", [dict(k=0, n=3, delta=0.5), dict(k=4, n=3, delta=0.5),
                                     dict(k=1, n=3, delta=-0.1), dict(k=1, n=3, delta=float("nan"))])
    def test_invalid_queries(self, bad):
        with pytest.raises(ValueError):
            VolumeQuery(**bad)

    def test_metric_parsing(self):
        assert Metric.parse("PF") is Metric.PROJECTIVE_F
        assert Metric.parse("projective-2") is Metric.PROJECTIVE_2
        with pytest.raises(ValueError):
            Metric.parse("chordal")

    def test_out_of_range_direct_calls(self):
        with pytest.raises(ValueError):
            volume_k2_pf(3, 0.5)
        with pytest.raises(ValueError):
            volume_k2_pf(6, 1.5)
        with pytest.raises(ValueError):
            volume_k1(4, 1.2)
        with pytest.raises(ValueError):
            volume_p2_general(3, 5, 0.5)

    def test_large_n_underflows_cleanly(self):
        assert volume(VolumeQuery(2, 1024, 0.5, "pf")) == 0.0
        assert volume(VolumeQuery(16, 1024, 0.99, "p2")) >= 0.0
        assert 0.0 < volume(VolumeQuery(2, 200, 1.4, "pf")) < 1.0

    @given(n=st.integers(4, 80), a=st.floats(0, math.sqrt(2)), b=st.floats(0, math.sqrt(2)))
    @settings(max_examples=300, deadline=None)
    def test_k2_monotone_property(self, n, a, b):
        lo, hi = min(a, b), max(a, b)
        assert volume_k2_pf(n, lo) <= volume_k2_pf(n, hi) * (1 + 1e-12) + 1e-300


class TestMonteCarlo:
    @pytest.mark.parametrize("metric", ["pf", "p2"])
    @pytest.mark.parametrize("k,n", [(1, 4), (1, 8), (2, 4), (2, 6), (3, 6), (3, 8)])
    def test_sup_norm_agreement(self, k, n, metric):
        top = 1.0 if (metric == "p2" or k >= 3) else math.sqrt(k)
        deltas = np.linspace(top / 200, top, 200)
        d = empirical(k, n, metric, 100_000, seed=31)
        closed = volume_curve(k, n, deltas, metric)
        assert np.max(np.abs(ecdf(d, deltas) - closed)) <= 0.01

    @pytest.mark.parametrize("k,n", [(3, 4), (5, 8)])
    def test_duality_by_sampling(self, k, n):
        deltas = np.linspace(0.01, 1.0, 100)
        d = empirical(k, n, "p2", 100_000, seed=32)
        assert np.max(np.abs(ecdf(d, deltas) - volume_curve(n - k, n, deltas, "p2"))) <= DKW99_1E5
        d = empirical(k, n, "pf", 100_000, seed=33)
        assert np.max(np.abs(ecdf(d, deltas) - volume_curve(n - k, n, deltas, "pf"))) <= DKW99_1E5

    def test_k2_n6_at_0_7_in_dkw_band(self):
        d = empirical(2, 6, "pf", 100_000, seed=34)
        assert abs(ecdf(d, [0.7])[0] - volume_k2_pf(6, 0.7)) <= DKW99_1E5

    def test_k2_n4_half_mass_at_one(self):
        d = empirical(2, 4, "pf", 100_000, seed=35)
        assert abs(ecdf(d, [1.0])[0] - 0.5) <= DKW99_1E5

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spade_discrim.chernoff import (
    chernoff_exponent,
    direct_imaging_chernoff,
    direct_imaging_chernoff_asymptotic,
    golden_section,
    q_s,
    quantum_bound,
    spade_chernoff_asymptotic,
)
from spade_discrim.errors import DegenerateError, DomainError, RegimeError
from spade_discrim.montecarlo import random_crosstalk
from spade_discrim.optics import identity_crosstalk, mode_probabilities, uniform_crosstalk


def grid_exponent(p0, p1, points=100_001):
    """Brute-force oracle: evaluate Q_s on a dense grid using plain powers."""
    p0, p1 = np.asarray(p0), np.asarray(p1)
    best = math.inf
    for s in np.linspace(0, 1, points):
        mask = (p0 > 0) & (p1 > 0)
        best = min(best, float(np.sum(p0[mask] ** s * p1[mask] ** (1 - s))))
    return -math.log(best)


class TestQs:
    def test_orthogonal_halves(self):
        assert q_s([1, 0], [0.5, 0.5], 0.5) == pytest.approx(0.7071067811865476, abs=1e-15)

    def test_endpoint_limit(self):
        assert q_s([1, 0], [0.5, 0.5], 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_identical_distributions(self):
        p = [0.2, 0.3, 0.5]
        for s in (0.0, 0.3, 1.0):
            assert q_s(p, p, s) == pytest.approx(1.0, abs=1e-15)

    def test_rejects_s_outside_unit_interval(self):
        with pytest.raises(DomainError):
            q_s([0.5, 0.5], [0.5, 0.5], 1.2)

    def test_rejects_mismatched_support(self):
        with pytest.raises(DomainError):
            q_s([0.5, 0.5], [1.0], 0.5)

    @settings(max_examples=50, deadline=None)
    @given(
        a=st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
        b=st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
    )
    def test_log_convex(self, a, b):
        p0 = np.array(a) / sum(a)
        p1 = np.array(b) / sum(b)
        s = np.linspace(0, 1, 21)
        logq = np.log([q_s(p0, p1, t) for t in s])
        second = logq[:-2] - 2 * logq[1:-1] + logq[2:]
        assert np.all(second >= -1e-12)


def test_golden_section_parabola():
    s, v = golden_section(lambda t: (t - 0.3) ** 2, 0.0, 1.0, tol=1e-10)
    assert s == pytest.approx(0.3, abs=1e-9)
    assert v == pytest.approx(0.0, abs=1e-18)


def test_golden_section_boundary_minimum():
    s, v = golden_section(lambda t: t, 0.0, 1.0)
    assert s == 0.0 and v == 0.0


class TestExactExponent:
    @pytest.mark.parametrize("x", [0.05, 0.1, 0.3, 0.8])
    def test_identity_closed_form(self, x):
        C = identity_crosstalk(2)
        res = chernoff_exponent(mode_probabilities(C, 0.0), mode_probabilities(C, x))
        assert res.xi == pytest.approx(math.log1p(x * x), abs=1e-9)
        assert res.method == "exact_minimization"

    def test_same_distribution_gives_zero(self):
        C = uniform_crosstalk(2, 0.01)
        d = mode_probabilities(C, 0.0)
        assert chernoff_exponent(d, d).xi == pytest.approx(0.0, abs=1e-15)

    def test_small_x_with_crosstalk(self):
        C = uniform_crosstalk(2, 0.0033)
        res = chernoff_exponent(mode_probabilities(C, 0.0), mode_probabilities(C, 0.01))
        assert res.xi == pytest.approx(3.788e-7, rel=0.10)
        assert res.s_min == pytest.approx(0.5, abs=0.05)

    @pytest.mark.parametrize("eps2,x", [(0.01, 0.1), (0.0033, 0.05), (0.001, 0.3)])
    def test_against_dense_grid(self, eps2, x):
        C = uniform_crosstalk(2, eps2)
        p0 = mode_probabilities(C, 0.0).probabilities
        p1 = mode_probabilities(C, x).probabilities
        assert chernoff_exponent(p0, p1).xi == pytest.approx(grid_exponent(p0, p1), abs=1e-9)

    def test_disjoint_supports(self):
        with pytest.raises(DegenerateError):
            chernoff_exponent([1.0, 0.0], [0.0, 1.0])

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 100_000), x=st.floats(0.001, 0.6), D=st.sampled_from([2, 3]))
    def test_never_beats_quantum_bound(self, seed, x, D):
        C = random_crosstalk(D, 0.01, seed)
        xi = chernoff_exponent(mode_probabilities(C, 0.0), mode_probabilities(C, x)).xi
        assert 0 <= xi <= x * x + 1e-9

    def test_crosstalk_hurts(self):
        x = 0.05
        ideal = identity_crosstalk(2)
        noisy = uniform_crosstalk(2, 0.01)
        xi_ideal = chernoff_exponent(mode_probabilities(ideal, 0), mode_probabilities(ideal, x)).xi
        xi_noisy = chernoff_exponent(mode_probabilities(noisy, 0), mode_probabilities(noisy, x)).xi
        assert xi_noisy < 0.2 * xi_ideal


class TestAsymptotics:
    def test_small_branch_example(self):
        res = spade_chernoff_asymptotic(0.01, 0.0033, "x_much_less")
        assert res.xi == pytest.approx(3.787878787878788e-07, rel=1e-12)
        assert res.s_min == 0.5

    def test_large_branch_example(self):
        res = spade_chernoff_asymptotic(0.3, 1e-4, "x_much_greater")
        assert res.xi == pytest.approx(0.07786, abs=5e-6)
        q = 0.09 / 1e-4
        assert res.s_min == pytest.approx(math.log(math.log(q)) / math.log(q), rel=1e-12)

    def test_plus_one_large_branch_tracks_exact(self):
        C = uniform_crosstalk(2, 1e-4 / 3)
        x = 0.3
        dist0, dist1 = mode_probabilities(C, 0.0), mode_probabilities(C, x)
        exact = chernoff_exponent(dist0, dist1).xi
        p0 = dist0.p10
        plus_one = spade_chernoff_asymptotic(x, p0, "x_much_greater", subleading="plus_one").xi
        minus_one = spade_chernoff_asymptotic(x, p0, "x_much_greater").xi
        assert abs(plus_one - exact) < abs(minus_one - exact)

    def test_zero_p0_rejected(self):
        with pytest.raises(DegenerateError):
            spade_chernoff_asymptotic(0.1, 0.0, "x_much_less")

    def test_large_branch_outside_regime(self):
        with pytest.raises(RegimeError):
            spade_chernoff_asymptotic(0.1, 0.01, "x_much_greater")

    def test_unknown_branch(self):
        with pytest.raises(DomainError):
            spade_chernoff_asymptotic(0.1, 0.01, "middle")

    def test_quantum_and_di_series(self):
        assert quantum_bound(0.1).xi == pytest.approx(0.01)
        assert direct_imaging_chernoff_asymptotic(0.1).xi == pytest.approx(1e-4)


def di_exponent_1d(x):
    """Oracle: the transverse factor integrates to one, leaving a 1D problem."""
    g = lambda r, c: math.sqrt(2 / math.pi) * math.exp(-2 * (r - c) ** 2)

    def q(s):
        f = lambda r: g(r, 0) ** s * (0.5 * g(r, x) + 0.5 * g(r, -x)) ** (1 - s)
        return integrate.quad(f, -10, 10, epsabs=1e-14, epsrel=1e-13)[0]

    best = min(q(s) for s in np.linspace(0.3, 0.7, 401))
    return -math.log(best)


class TestDirectImaging:
    def test_zero_separation(self):
        assert direct_imaging_chernoff(0.0).xi == 0.0

    def test_small_separation_series(self):
        res = direct_imaging_chernoff(0.1)
        assert res.xi == pytest.approx(1e-4, rel=0.05)
        assert res.s_min == pytest.approx(0.5, abs=0.02)

    def test_against_one_dimensional_oracle(self):
        res = direct_imaging_chernoff(0.1)
        assert res.xi == pytest.approx(di_exponent_1d(0.1), rel=1e-3)

    @pytest.mark.slow
    def test_moderate_separation(self):
        res = direct_imaging_chernoff(0.2)
        assert res.xi == pytest.approx(0.2**4, rel=0.15)
        assert res.xi == pytest.approx(di_exponent_1d(0.2), rel=1e-3)

    def test_far_below_spade(self):
        assert direct_imaging_chernoff(0.1).xi < 0.02 * quantum_bound(0.1).xi

    def test_negative_separation_rejected(self):
        with pytest.raises(DomainError):
            direct_imaging_chernoff(-0.1)

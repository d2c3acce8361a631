import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spade_discrim.decision_rules import NaiveMean, Original, SemiSeparation, crosstalk_p0, error_probs_exact, gamma_coefficient
from spade_discrim.errors import DomainError
from spade_discrim.montecarlo import (
    ENSEMBLE_HEADER,
    binomial_stderr,
    chernoff_ensemble,
    empirical_error_rates,
    gell_mann_basis,
    random_crosstalk,
    sample_counts,
    summarize,
)
from spade_discrim.optics import ModeDistribution, crosstalk_strength, mode_probabilities, uniform_crosstalk, unitarity_defect

PAULI = [
    np.array([[0, 1], [1, 0]]),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]]),
]


class TestGellMann:
    def test_dim_two_is_pauli(self):
        basis = gell_mann_basis(2)
        assert len(basis) == 3
        for g, s in zip(basis, PAULI):
            np.testing.assert_array_equal(g, s)

    @pytest.mark.parametrize("dim", [3, 4, 9])
    def test_orthonormal_traceless_hermitian(self, dim):
        basis = gell_mann_basis(dim)
        assert len(basis) == dim * dim - 1
        for i, a in enumerate(basis):
            np.testing.assert_allclose(a, a.conj().T, atol=0)
            assert abs(np.trace(a)) <= 1e-14
            for j, b in enumerate(basis):
                assert abs(np.trace(a @ b) - 2.0 * (i == j)) <= 1e-14

    def test_rejects_small_dim(self):
        with pytest.raises(DomainError):
            gell_mann_basis(1)


class TestRandomCrosstalk:
    def test_zero_strength(self):
        C = random_crosstalk(2, 0.0, seed=5)
        np.testing.assert_array_equal(C.entries, np.eye(4))

    def test_deterministic(self):
        a = random_crosstalk(3, 0.01, seed=42)
        b = random_crosstalk(3, 0.01, seed=42)
        np.testing.assert_array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, random_crosstalk(3, 0.01, seed=43).entries)

    def test_metadata(self):
        C = random_crosstalk(2, 0.004, seed=9)
        assert C.model == "unitary_random" and C.seed == 9
        assert C.mu == pytest.approx(math.sqrt(0.004 * 15 / 2))
        assert C.realized_epsilon2 == crosstalk_strength(C.entries)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31), eps2=st.floats(0, 0.2), D=st.sampled_from([2, 3, 4]))
    def test_unitary(self, seed, eps2, D):
        assert unitarity_defect(random_crosstalk(D, eps2, seed).entries) <= 1e-12

    def test_mean_strength(self):
        realized = [random_crosstalk(2, 1e-3, s).realized_epsilon2 for s in range(1000)]
        assert np.mean(realized) == pytest.approx(1e-3, rel=0.10)

    def test_negative_target(self):
        with pytest.raises(DomainError):
            random_crosstalk(2, -0.1, 0)


class TestSampleCounts:
    def test_zero_photons(self):
        dist = mode_probabilities(uniform_crosstalk(2, 0.01), 0.1)
        np.testing.assert_array_equal(sample_counts(dist, 0, 1).counts, 0)

    def test_point_mass(self):
        dist = ModeDistribution([1.0, 0, 0, 0], 2, 0.0)
        np.testing.assert_array_equal(sample_counts(dist, 17, 3).counts, [17, 0, 0, 0])

    def test_frequencies(self):
        dist = mode_probabilities(uniform_crosstalk(2, 0.01), 0.3)
        n = 100_000
        freq = sample_counts(dist, n, 2024).counts / n
        p = dist.probabilities
        assert np.all(np.abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / n))

    def test_deterministic(self):
        dist = mode_probabilities(uniform_crosstalk(2, 0.01), 0.3)
        np.testing.assert_array_equal(sample_counts(dist, 500, 8).counts, sample_counts(dist, 500, 8).counts)

    def test_negative_n(self):
        dist = mode_probabilities(uniform_crosstalk(2, 0.01), 0.3)
        with pytest.raises(DomainError):
            sample_counts(dist, -1, 0)


class TestEmpiricalRates:
    def test_symmetric_case(self):
        C = uniform_crosstalk(2, 0.01)
        rep = empirical_error_rates(NaiveMean(), C, 0.0, 1000, 4000, seed=1)
        sigma = binomial_stderr(0.5, 4000) / math.sqrt(2)
        assert abs(rep.pe - 0.5) <= 3 * sigma

    def test_original_alpha_closed_form(self):
        C = uniform_crosstalk(2, 0.01)
        trials = 10_000
        rep = empirical_error_rates(Original(), C, 0.05, 1000, trials, seed=7)
        expected = 1 - 0.99**1000
        assert abs(rep.alpha - expected) <= 3 * binomial_stderr(expected, trials)
        assert rep.method == "monte_carlo"

    @pytest.mark.parametrize(
        "spec,x,n",
        [(SemiSeparation(0.02), 0.05, 20_000), (NaiveMean(), 0.1, 5000), (Original(), 0.1, 30)],
    )
    def test_matches_exact(self, spec, x, n):
        C = uniform_crosstalk(2, 0.01)
        trials = 3000
        emp = empirical_error_rates(spec, C, x, n, trials, seed=100)
        ref = error_probs_exact(spec, n, crosstalk_p0(C), mode_probabilities(C, x).p10, gamma_coefficient(C))
        assert abs(emp.alpha - ref.alpha) <= 3 * binomial_stderr(ref.alpha, trials) + 1e-12
        assert abs(emp.beta - ref.beta) <= 3 * binomial_stderr(ref.beta, trials) + 1e-12

    def test_trials_must_be_positive(self):
        with pytest.raises(DomainError):
            empirical_error_rates(Original(), uniform_crosstalk(2, 0.01), 0.1, 10, 0, seed=0)


class TestSummarize:
    def test_three_values(self):
        s = summarize([1, 2, 3])
        assert (s.median, s.q25, s.q75, s.n_samples) == (2.0, 1.5, 2.5, 3)

    def test_even_count_midpoint(self):
        assert summarize([4, 1, 3, 2]).median == 2.5

    def test_constant(self):
        s = summarize([0.7] * 5)
        assert s.median == s.q25 == s.q75 == 0.7

    def test_empty(self):
        with pytest.raises(DomainError):
            summarize([])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.randoms())
    def test_order_and_permutation(self, values, rnd):
        s = summarize(values)
        shuffled = list(values)
        rnd.shuffle(shuffled)
        assert s == summarize(shuffled)
        assert s.q25 <= s.median <= s.q75


def test_ensemble_rows():
    rows = chernoff_ensemble(2, 0.0033, [1e-3, 0.1], samples=3, seed=10)
    assert len(rows) == 6
    assert [r.seed for r in rows[::2]] == [10, 11, 12]
    assert len(rows[0].csv_row().split(",")) == len(ENSEMBLE_HEADER.split(","))

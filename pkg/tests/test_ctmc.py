import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from mmisq import ctmc
from mmisq.errors import (DimensionMismatch, NegativeRate, NegativeTime, Reducible,
                          RowSumViolation)

from conftest import random_generator

Q_EX = [[-1.0, 1.0], [3.0, -3.0]]
Q_SYM = [[-1.0, 1.0], [1.0, -1.0]]


def quadrature_deviation(Q, pi, T, h=1e-3):
    """Trapezoid rule for the integral of (e^{Qt} - Pi) over [0, T]."""
    n = int(round(T / h))
    step = sla.expm(np.asarray(Q) * h)
    P = np.eye(len(pi))
    Pi = np.outer(np.ones(len(pi)), pi)
    acc = 0.5 * (P - Pi)
    for _ in range(n - 1):
        P = P @ step
        acc += P - Pi
    P = P @ step
    acc += 0.5 * (P - Pi)
    return acc * h


def reachable(adj, src):
    seen, stack = {src}, [src]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                stack.append(int(j))
    return seen


class TestValidate:
    def test_two_state(self):
        G = ctmc.validate_generator(Q_EX)
        assert G.d == 2
        np.testing.assert_array_equal(G.exit_rates, [1.0, 3.0])

    def test_single_state(self):
        assert ctmc.validate_generator([[0.0]]).d == 1

    def test_reducible(self):
        q = np.array([[-1.0, 1.0], [0.0, 0.0]])
        # oracle: state 2 cannot reach state 1
        assert 0 not in reachable(q - np.diag(np.diag(q)) > 0, 1)
        with pytest.raises(Reducible):
            ctmc.validate_generator(q)

    def test_negative_rate_names_entry(self):
        with pytest.raises(NegativeRate, match=r"q\[1,2\]"):
            ctmc.validate_generator([[1.0, -1.0], [3.0, -3.0]])

    def test_bad_row_sum_names_row(self):
        with pytest.raises(RowSumViolation, match="row 2"):
            ctmc.validate_generator([[-1.0, 1.0], [3.0, -2.0]])

    def test_fill_diagonal(self):
        G = ctmc.validate_generator([[0.0, 1.0], [3.0, 0.0]], fill_diagonal=True)
        np.testing.assert_array_equal(G.rates, Q_EX)

    @pytest.mark.parametrize("bad", [[], [[1.0, 2.0]], [[[0.0]]]])
    def test_shape(self, bad):
        with pytest.raises(ValueError):
            ctmc.validate_generator(bad)

    def test_rates_read_only(self):
        G = ctmc.validate_generator(Q_EX)
        with pytest.raises(ValueError):
            G.rates[0, 0] = 5.0


@pytest.mark.parametrize("Q, pi", [(Q_EX, [0.75, 0.25]), ([[0.0]], [1.0]), (Q_SYM, [0.5, 0.5])])
def test_stationary(Q, pi):
    law = ctmc.stationary_distribution(ctmc.validate_generator(Q))
    np.testing.assert_allclose(law.pi, pi, atol=1e-14)


class TestTransient:
    @pytest.mark.parametrize("t", [0.0, 0.01, 0.3, 1.0, 7.5])
    def test_two_state_closed_form(self, t):
        q1, q2 = 1.0, 3.0
        qb = q1 + q2
        e = np.exp(-qb * t)
        want = np.array([[q2 + q1 * e, q1 - q1 * e], [q2 - q2 * e, q1 + q2 * e]]) / qb
        got = ctmc.transient_matrix(ctmc.validate_generator(Q_EX), t)
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_zero_time_identity(self):
        G = random_generator(np.random.default_rng(1), 5)
        np.testing.assert_array_equal(ctmc.transient_matrix(G, 0.0), np.eye(5))

    def test_relaxation_rate_two_state(self):
        # P(t) - Pi = e^{-4t} [[q1, -q1], [-q2, q2]] / 4; at t = 10/gap the gap is e^{-10} sized
        G = ctmc.validate_generator(Q_EX)
        t = 10 / ctmc.spectral_gap(G)
        resid = ctmc.transient_matrix(G, t) - np.array([[0.75, 0.25], [0.75, 0.25]])
        np.testing.assert_allclose(resid, np.exp(-10) * np.array([[0.25, -0.25], [-0.75, 0.75]]),
                                   rtol=1e-9, atol=1e-15)

    def test_relaxes_to_pi(self):
        G = random_generator(np.random.default_rng(2), 4, sparse=True)
        pi = ctmc.stationary_distribution(G).pi
        P = ctmc.transient_matrix(G, 20 / ctmc.spectral_gap(G))
        np.testing.assert_allclose(P, np.tile(pi, (4, 1)), atol=1e-6)

    def test_negative_time(self):
        with pytest.raises(NegativeTime):
            ctmc.transient_matrix(ctmc.validate_generator(Q_EX), -1.0)

    def test_large_time_stiff(self):
        G = ctmc.validate_generator(np.array(Q_EX) * 1e4)
        P = ctmc.transient_matrix(G, 3.0)
        np.testing.assert_allclose(P, [[0.75, 0.25], [0.75, 0.25]], atol=1e-12)


class TestDeviation:
    @pytest.mark.parametrize("Q, want", [
        (Q_EX, np.array([[1.0, -1.0], [-3.0, 3.0]]) / 16),
        (Q_SYM, np.array([[1.0, -1.0], [-1.0, 1.0]]) / 4),
    ])
    def test_against_quadrature(self, Q, want):
        G = ctmc.validate_generator(Q)
        law = ctmc.stationary_distribution(G)
        D = ctmc.deviation_matrix(G, law).D
        oracle = quadrature_deviation(Q, law.pi, T=40 / ctmc.spectral_gap(G))
        np.testing.assert_allclose(D, oracle, atol=1e-6)
        np.testing.assert_allclose(D, want, atol=1e-14)

    def test_random_against_quadrature(self):
        G = random_generator(np.random.default_rng(3), 3, sparse=True)
        law = ctmc.stationary_distribution(G)
        T = 40 / ctmc.spectral_gap(G)
        oracle = quadrature_deviation(G.rates, law.pi, T, h=min(1e-3, T / 2e4))
        np.testing.assert_allclose(ctmc.deviation_matrix(G).D, oracle, atol=1e-6)

    def test_single_state(self):
        np.testing.assert_array_equal(ctmc.deviation_matrix(ctmc.validate_generator([[0.0]])).D, [[0.0]])


class TestCovariance:
    def test_two_state(self):
        G = ctmc.validate_generator(Q_EX)
        law = ctmc.stationary_distribution(G)
        C = ctmc.covariance_c(law, ctmc.deviation_matrix(G, law)).C
        np.testing.assert_allclose(C, 3 / 32 * np.array([[1, -1], [-1, 1]]), atol=1e-12)

    def test_single_state(self):
        G = ctmc.validate_generator([[0.0]])
        law = ctmc.stationary_distribution(G)
        assert ctmc.covariance_c(law, ctmc.deviation_matrix(G, law)).C[0, 0] == 0.0


def _cov(Q):
    G = ctmc.validate_generator(Q)
    law = ctmc.stationary_distribution(G)
    return ctmc.covariance_c(law, ctmc.deviation_matrix(G, law))


@pytest.mark.parametrize("Q, lam, want", [
    (Q_EX, [1.0, 4.0], 27 / 32),
    (Q_EX, [2.0, 2.0], 0.0),
    ([[0.0]], [3.0], 0.0),
])
def test_thorn(Q, lam, want):
    assert ctmc.thorn(lam, _cov(Q)) == pytest.approx(want, abs=1e-12)


def test_thorn_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ctmc.thorn([1.0, 2.0, 3.0], _cov(Q_EX))


@st.composite
def generators(draw):
    d = draw(st.integers(2, 6))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_generator(np.random.default_rng(seed), d, sparse=draw(st.booleans()))


@settings(max_examples=60, deadline=None)
@given(generators(), st.integers(0, 2**32 - 1))
def test_identities_property(G, lam_seed):
    law = ctmc.stationary_distribution(G)
    D = ctmc.deviation_matrix(G, law).D
    Q, pi, d = G.rates, law.pi, G.d
    Pi = np.tile(pi, (d, 1))
    assert np.max(np.abs(Q @ D - (Pi - np.eye(d)))) <= 1e-9
    assert np.max(np.abs(D.sum(axis=1))) <= 1e-10
    assert np.max(np.abs(pi @ D)) <= 1e-10
    cov = ctmc.covariance_c(law, ctmc.deviation_matrix(G, law))
    np.testing.assert_allclose(cov.C, cov.C.T, atol=1e-12)
    assert np.max(np.abs(cov.C.sum(axis=1))) <= 1e-10
    # C is a covariance: positive semidefinite
    assert np.linalg.eigvalsh(cov.C).min() >= -1e-10
    lam = np.random.default_rng(lam_seed).uniform(0, 5, d)
    assert ctmc.thorn(lam, cov) >= 0.0
    assert ctmc.thorn(lam + 7.0, cov) == pytest.approx(ctmc.thorn(lam, cov), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(generators(), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_transient_semigroup(G, s, t):
    P = ctmc.transient_matrix
    np.testing.assert_allclose(P(G, s) @ P(G, t), P(G, s + t), atol=1e-11)
    Pt = P(G, t)
    assert Pt.min() >= 0.0
    np.testing.assert_allclose(Pt.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(Pt, sla.expm(G.rates * t), atol=1e-10)

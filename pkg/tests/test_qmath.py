import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqkd.errors import DomainError
from sqkd.qmath import (CqDecomposition, binary_entropy, binary_entropy_vec, conditional_entropy_cq,
                        cq_density, partial_trace_first, shannon_entropy, theorem1_bound,
                        von_neumann_entropy)


def test_binary_entropy_anchors():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.4999162, abs=1e-6)


def test_binary_entropy_rejects_out_of_range():
    with pytest.raises(DomainError):
        binary_entropy(1.1)
    with pytest.raises(DomainError):
        binary_entropy(-0.01)


def test_binary_entropy_clamps_roundoff():
    assert binary_entropy(1.0 + 1e-14) == 0.0


@given(st.floats(0.0, 1.0))
def test_binary_entropy_symmetric_and_bounded(p):
    assert binary_entropy(p) == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)
    assert 0.0 <= binary_entropy(p) <= 1.0


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50))
def test_vector_matches_scalar(ps):
    vec = binary_entropy_vec(np.array(ps))
    for p, v in zip(ps, vec):
        assert v == pytest.approx(binary_entropy(p), abs=1e-14)


def test_shannon_entropy():
    assert shannon_entropy([0.25] * 4) == pytest.approx(2.0)
    assert shannon_entropy([1.0, 0.0]) == 0.0
    with pytest.raises(DomainError, match="sum"):
        shannon_entropy([0.5, 0.6])


def test_von_neumann_entropy_of_mixed_qubit():
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0)
    psi = np.array([1, 1j]) / math.sqrt(2)
    assert von_neumann_entropy(np.outer(psi, psi.conj())) == pytest.approx(0.0, abs=1e-12)


def test_von_neumann_rejects_bad_input():
    with pytest.raises(DomainError):
        von_neumann_entropy(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(DomainError):
        von_neumann_entropy(np.eye(2))


def test_partial_trace_product_state():
    a = np.diag([0.3, 0.7]).astype(complex)
    b = np.diag([0.1, 0.2, 0.7]).astype(complex)
    assert np.allclose(partial_trace_first(np.kron(a, b), 2), b)


def _random_vectors(rng, d, count):
    vs = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return [v * rng.uniform(0.1, 1.0) / np.linalg.norm(v) for v in vs]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_pairwise_bound_is_a_lower_bound(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c, e = _random_vectors(rng, d, 4)
    norm = sum(float(np.vdot(v, v).real) for v in (a, b, c, e))
    cq = CqDecomposition(zero=(a, c), one=(b, e), norm=norm)
    exact = conditional_entropy_cq(cq)
    assert theorem1_bound(cq) <= exact + 1e-9


def test_orthogonal_eve_states_leave_no_uncertainty():
    e = np.eye(4, dtype=complex)
    cq = CqDecomposition(zero=(e[0], e[1]), one=(e[2], e[3]), norm=4.0)
    assert theorem1_bound(cq) == pytest.approx(0.0, abs=1e-12)
    assert conditional_entropy_cq(cq) == pytest.approx(0.0, abs=1e-12)


def test_identical_eve_states_leave_full_uncertainty():
    v = np.array([1.0, 0.0], dtype=complex)
    cq = CqDecomposition(zero=(v,), one=(v,), norm=2.0)
    assert theorem1_bound(cq) == pytest.approx(1.0)
    assert conditional_entropy_cq(cq) == pytest.approx(1.0)


def test_cq_density_is_a_state():
    rng = np.random.default_rng(3)
    a, b = _random_vectors(rng, 3, 2)
    n = float(np.vdot(a, a).real + np.vdot(b, b).real)
    rho = cq_density(CqDecomposition(zero=(a,), one=(b,), norm=n))
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T)


def test_decomposition_rejects_nonpositive_norm():
    with pytest.raises(DomainError):
        CqDecomposition(zero=(), one=(), norm=0.0)


def test_pairwise_bound_random_corpus():
    rng = np.random.default_rng(2024)
    worst = -np.inf
    for _ in range(10_000):
        d = int(rng.integers(1, 9))
        a, b, c, e = _random_vectors(rng, d, 4)
        norm = sum(float(np.vdot(v, v).real) for v in (a, b, c, e))
        cq = CqDecomposition(zero=(a, c), one=(b, e), norm=norm)
        worst = max(worst, theorem1_bound(cq) - conditional_entropy_cq(cq))
    assert worst <= 1e-9


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8).filter(lambda v: sum(v) > 1e-3))
def test_diagonal_von_neumann_is_shannon(weights):
    p = np.array(weights) / sum(weights)
    assert von_neumann_entropy(np.diag(p)) == pytest.approx(shannon_entropy(p), abs=1e-10)

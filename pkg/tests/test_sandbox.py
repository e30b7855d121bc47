import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.stats import unitary_group

from spectral_orbits.geometry import GridBox, GridSet
from spectral_orbits.kdata import SpectralDatum, cuntz
from spectral_orbits.matching import bipartite_schedule
from spectral_orbits.sandbox import (
    NormalMatrixModel,
    PreconditionError,
    analytic_calculus_bound,
    block_diagonal_part,
    execute_plan,
    is_unitary,
    lower_bound_check,
    opnorm,
    projection_conjugator,
    realize_spectrum,
    semicontinuity_probe,
    triangular_similarity,
)


def test_realize_spectrum_multiplicity():
    m = realize_spectrum([1, 1j, 1, 2])
    assert m.eigenvalues == (1, 1j, 2) and m.multiplicities == (2, 1, 1)
    assert m.dimension == 4
    assert np.allclose(m.matrix(), np.diag([1, 1, 1j, 2]))
    with pytest.raises(ValueError):
        realize_spectrum([])
    with pytest.raises(ValueError):
        NormalMatrixModel((1, 1), (1, 1))


def test_execute_plan_two_boxes():
    o2 = cuntz(2)
    d1 = SpectralDatum(GridSet(1.0, frozenset({GridBox(0, 0), GridBox(1, 0)})), o2)
    d2 = SpectralDatum(GridSet(1.0, frozenset({GridBox(1, 0)})), o2)
    m1, m2, u, achieved = execute_plan(bipartite_schedule(d1, d2))
    assert is_unitary(u)
    assert achieved == 1.0
    assert opnorm(m1 - u.conj().T @ m2 @ u) == pytest.approx(achieved)
    assert lower_bound_check(m1, m2, u)


def test_lower_bound_random_unitaries():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        a = np.diag(rng.normal(size=n) + 1j * rng.normal(size=n))
        b = np.diag(rng.normal(size=n) + 1j * rng.normal(size=n))
        u = unitary_group.rvs(n, random_state=rng) if n > 1 else np.array([[np.exp(1j * rng.uniform(0, 6))]])
        assert lower_bound_check(a, b, u)
    with pytest.raises(ValueError, match="unitary"):
        lower_bound_check(np.eye(2), np.eye(2), 2 * np.eye(2))


def test_conjugator_rotation():
    p = np.diag([1.0, 0.0])
    for theta in (0.1, 0.3, 0.5):
        v = np.array([np.cos(theta), np.sin(theta)])
        q = np.outer(v, v)
        w, err = projection_conjugator(p, q, np.eye(2))
        assert is_unitary(w) and err < 1e-12
    # gap sin(0.6435) = 0.6 is too large
    with pytest.raises(PreconditionError, match="not below 1/2"):
        projection_conjugator(p, np.array([[0.64, 0.48], [0.48, 0.36]]), np.eye(2))


def test_conjugator_non_unitary_v():
    rng = np.random.default_rng(3)
    n, r = 6, 2
    p = np.diag([1.0] * r + [0.0] * (n - r))
    v = expm(0.05 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))))
    p0 = v @ p @ np.linalg.inv(v)
    # the orthogonal projection onto the range of p0 is close to p0
    basis, _ = np.linalg.qr(p0[:, :r])
    q = basis @ basis.conj().T
    w, err = projection_conjugator(p, q, v)
    assert is_unitary(w, 1e-10) and err < 1e-10


def test_conjugator_rejects_non_projection():
    with pytest.raises(ValueError, match="projection"):
        projection_conjugator(np.array([[1, 1], [0, 0]]), np.eye(2), np.eye(2))


def test_triangular_examples():
    t, err = triangular_similarity([(1, 1), (0, 1)], [[0, 0.5], [0, 0]])
    assert np.allclose(t, [[1, 0.5], [0, 1]])
    assert err < 1e-14
    with pytest.raises(ValueError, match="distinct scalars required"):
        triangular_similarity([(1, 1), (1, 1)], [[0, 1], [0, 0]])
    with pytest.raises(ValueError, match="block diagonal"):
        triangular_similarity([(1, 1), (0, 1)], [[0, 0], [1, 0]])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=4), st.integers(0, 2**32 - 1))
def test_triangular_property(dims, seed):
    rng = np.random.default_rng(seed)
    lams = [complex(k, (k * 7) % 3) for k in range(len(dims))]
    n = sum(dims)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    x = x - np.tril(x)
    offsets = np.cumsum([0] + dims)
    for i in range(len(dims)):
        x[offsets[i] : offsets[i + 1], offsets[i] : offsets[i + 1]] = 0
    t, err = triangular_similarity(list(zip(lams, dims)), x)
    assert err < 1e-8
    d = np.diag(np.repeat(lams, dims))
    assert np.allclose(block_diagonal_part(t @ (d + x) @ np.linalg.inv(t), dims), d)


SQUARE = [2 + 2j, -2 + 2j, -2 - 2j, 2 - 2j]


def test_analytic_identity_and_exp():
    a = np.diag([0.2, -0.3])
    r = analytic_calculus_bound(a, a, np.eye(2), lambda z: np.exp(z), SQUARE)
    assert r.rhs == 0 and r.lhs < 1e-10 and r.holds
    b = np.diag([0.25, -0.3])
    r = analytic_calculus_bound(a, b, np.eye(2), lambda z: np.exp(z), SQUARE)
    assert r.holds
    exact = abs(np.exp(0.2) - np.exp(0.25))
    assert abs(r.lhs - exact) <= r.quadrature_error
    finer = analytic_calculus_bound(a, b, np.eye(2), lambda z: np.exp(z), SQUARE, per_edge=256)
    assert abs(finer.lhs - exact) < abs(r.lhs - exact) / 10


def test_analytic_contour_errors():
    a = np.diag([0.2, 3.0])
    with pytest.raises(ValueError, match="wind"):
        analytic_calculus_bound(a, a, np.eye(2), np.exp, SQUARE)
    with pytest.raises(ValueError, match="meets"):
        analytic_calculus_bound(np.diag([2.0, 0.0]), np.diag([2.0, 0.0]), np.eye(2), np.exp, SQUARE)


def test_semicontinuity_probe():
    seq = [NormalMatrixModel((1 / k,), (1,)) for k in range(1, 14)]
    assert semicontinuity_probe(seq, (0, 0.1), start=1) == 11
    assert semicontinuity_probe(seq, (5, 0.1)) is None
    with pytest.raises(ValueError):
        semicontinuity_probe(seq, (0, 0))

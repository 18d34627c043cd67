"""Jet arithmetic against brute-force polynomial-dictionary oracles."""

import json
import math

import numpy as np
import pytest

from transportkit.errors import FieldMismatchError, ShapeMismatchError
from transportkit.jets import (
    H_dim,
    Jet,
    P_dim,
    VectorFieldJet,
    degree_starts,
    grlex_key,
    jet_directional_derivative,
    jet_from_json,
    jet_mul,
    jet_to_json,
    monomials,
)

from conftest import (
    dict_directional,
    dict_mul,
    dict_truncate,
    dicts_close,
    jet_to_dict,
)


def _random_scalar_jet(rng, n, N, density=0.8):
    coeffs = rng.standard_normal(P_dim(n, N))
    coeffs *= rng.random(coeffs.shape) < density
    return Jet(n, N, coeffs)


def _random_field(rng, n, N):
    comps = []
    for _ in range(n):
        j = _random_scalar_jet(rng, n, N)
        c = np.array(j.coeffs)
        c[0] = 0.0
        comps.append(Jet(n, N, c))
    return VectorFieldJet(comps)


# -- basis and ordering ------------------------------------------------

def test_p2_basis_two_variables():
    assert monomials(2, 2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def test_grlex_is_strict_total_order():
    mons = monomials(3, 4)
    keys = [grlex_key(a) for a in mons]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)
    degrees = [sum(a) for a in mons]
    assert degrees == sorted(degrees)


def test_dimension_formulas():
    for n in (1, 2, 3, 4):
        for N in range(5):
            assert P_dim(n, N) == math.comb(n + N, n)
            assert len(monomials(n, N)) == P_dim(n, N)
    assert H_dim(2, 3) == 4
    starts = degree_starts(2, 3)
    assert list(starts) == [0, 1, 3, 6, 10]


# -- multiplication ----------------------------------------------------

def test_mul_simple_truncation():
    one_plus = Jet.from_terms(1, 1, {(0,): 1.0, (1,): 1.0})
    one_minus = Jet.from_terms(1, 1, {(0,): 1.0, (1,): -1.0})
    assert (one_plus * one_minus) == Jet.from_terms(1, 1, {(0,): 1.0})


def test_mul_coordinates():
    y1 = Jet.coordinate(2, 2, 0)
    y2 = Jet.coordinate(2, 2, 1)
    assert (y1 * y2) == Jet.from_terms(2, 2, {(1, 1): 1.0})


def test_mul_matches_dict_oracle(rng):
    for _ in range(20):
        a = _random_scalar_jet(rng, 2, 3)
        b = _random_scalar_jet(rng, 2, 3)
        got = jet_to_dict(jet_mul(a, b))
        want = dict_truncate(dict_mul(jet_to_dict(a), jet_to_dict(b)), 3)
        assert dicts_close(got, want)


def test_mul_ring_axioms(rng):
    a = _random_scalar_jet(rng, 2, 3)
    b = _random_scalar_jet(rng, 2, 3)
    c = _random_scalar_jet(rng, 2, 3)
    assert jet_mul(a, b).allclose(jet_mul(b, a))
    assert jet_mul(jet_mul(a, b), c).allclose(jet_mul(a, jet_mul(b, c)))
    assert jet_mul(a, b + c).allclose(jet_mul(a, b) + jet_mul(a, c))


def test_quotient_truncation_consistency(rng):
    # multiplying then truncating equals truncating then multiplying
    a = _random_scalar_jet(rng, 2, 5)
    b = _random_scalar_jet(rng, 2, 5)
    lhs = jet_mul(a, b).project(3)
    rhs = jet_mul(a.project(3), b.project(3))
    assert lhs.allclose(rhs)


def test_matrix_vector_products(rng):
    A = Jet(2, 2, rng.standard_normal((P_dim(2, 2), 2, 2)))
    v = Jet(2, 2, rng.standard_normal((P_dim(2, 2), 2)))
    got = jet_mul(A, v)
    # oracle: expand by hand on dictionaries of arrays
    a_d = jet_to_dict(A)
    v_d = jet_to_dict(v)
    want = {}
    for alpha, ca in a_d.items():
        for beta, cb in v_d.items():
            gamma = tuple(x + y for x, y in zip(alpha, beta))
            if sum(gamma) <= 2:
                want[gamma] = want.get(gamma, np.zeros(2)) + ca @ cb
    assert dicts_close(jet_to_dict(got), want)


def test_scalar_value_broadcasting(rng):
    s = _random_scalar_jet(rng, 2, 2)
    v = Jet(2, 2, rng.standard_normal((P_dim(2, 2), 3)))
    sv = jet_mul(s, v)
    vs = jet_mul(v, s)
    assert sv.allclose(vs)
    assert sv.value_shape == (3,)


# -- directional derivative ---------------------------------------------

def test_euler_field_scales_by_degree():
    X = VectorFieldJet.euler(1, 4)
    for k in range(5):
        u = Jet.from_terms(1, 4, {(k,): 1.0})
        got = jet_directional_derivative(X, u)
        assert got.allclose(k * u)


def test_directional_derivative_gradient_example():
    # X = grad(y1^2/2 + y1^2 y2 + y2^2) applied to u = y2 gives X^2 = y1^2 + 2 y2
    phi = Jet.from_terms(2, 3, {(2, 0): 0.5, (2, 1): 1.0, (0, 2): 1.0})
    X = VectorFieldJet.from_gradient(phi)
    u = Jet.coordinate(2, 3, 1)
    got = jet_directional_derivative(X, u)
    assert got == Jet.from_terms(2, 3, {(2, 0): 1.0, (0, 1): 2.0})


def test_directional_derivative_matches_dict_oracle(rng):
    for _ in range(10):
        X = _random_field(rng, 2, 4)
        u = _random_scalar_jet(rng, 2, 4)
        got = jet_to_dict(jet_directional_derivative(X, u))
        want = dict_truncate(
            dict_directional([jet_to_dict(c) for c in X.components],
                             jet_to_dict(u)), 4)
        assert dicts_close(got, want, tol=1e-10)


def test_directional_derivative_preserves_vanishing_order(rng):
    X = _random_field(rng, 2, 5)
    u = Jet.from_terms(2, 5, {(2, 1): 1.0, (0, 4): -2.0})
    assert u.vanishing_order() == 3
    got = jet_directional_derivative(X, u)
    assert got.vanishing_order() >= 3


def test_leibniz_rule(rng):
    X = _random_field(rng, 2, 4)
    u = _random_scalar_jet(rng, 2, 4)
    v = _random_scalar_jet(rng, 2, 4)
    lhs = jet_directional_derivative(X, jet_mul(u, v))
    rhs = jet_mul(jet_directional_derivative(X, u), v) + \
        jet_mul(u, jet_directional_derivative(X, v))
    assert lhs.allclose(rhs, rtol=1e-9, atol=1e-9)


# -- projection, slices, vanishing order --------------------------------

def test_projection_examples():
    u = Jet.from_terms(1, 2, {(0,): 1.0, (1,): 1.0, (2,): 1.0})
    assert u.project(1) == Jet.from_terms(1, 1, {(0,): 1.0, (1,): 1.0})
    cubed = Jet.from_terms(1, 3, {(3,): 1.0})
    assert cubed.project(2) == Jet.zero(1, 2)


def test_homogeneous_parts_sum_to_jet(rng):
    u = _random_scalar_jet(rng, 3, 3)
    total = Jet.zero(3, 3)
    for k in range(4):
        total = total + u.homogeneous_part(k)
    assert total.allclose(u)


def test_vanishing_order():
    assert Jet.zero(2, 3).vanishing_order() == math.inf
    u = Jet.from_terms(2, 3, {(1, 1): 5.0})
    assert u.vanishing_order() == 2
    assert Jet.constant(2, 3, 1.0).vanishing_order() == 0


def test_member_of_maximal_ideal_power_projects_to_zero():
    u = Jet.from_terms(2, 5, {(3, 1): 1.0, (0, 5): 2.0})  # in m^4
    assert u.project(3) == Jet.zero(2, 3)


# -- field and shape discipline -----------------------------------------

def test_field_mixing_raises(rng):
    a = _random_scalar_jet(rng, 2, 2)
    b = a.to_complex()
    with pytest.raises(FieldMismatchError):
        a + b
    with pytest.raises(FieldMismatchError):
        jet_mul(a, b)
    with pytest.raises(FieldMismatchError):
        a * (1 + 2j)
    assert (a.to_complex() * (1 + 2j)).is_complex


def test_shape_mismatch_raises(rng):
    a = _random_scalar_jet(rng, 2, 2)
    b = _random_scalar_jet(rng, 2, 3)
    with pytest.raises(ShapeMismatchError):
        a + b
    v = Jet(2, 2, rng.standard_normal((P_dim(2, 2), 2)))
    M = Jet(2, 2, rng.standard_normal((P_dim(2, 2), 2, 2)))
    with pytest.raises(ShapeMismatchError):
        jet_mul(v, M)  # vector*matrix is not defined


def test_immutability(rng):
    a = _random_scalar_jet(rng, 2, 2)
    with pytest.raises(ValueError):
        a.coeffs[0] = 99.0


def test_vector_field_rejects_constant_term():
    bad = Jet.from_terms(2, 2, {(0, 0): 1.0})
    good = Jet.coordinate(2, 2, 1)
    with pytest.raises(ValueError):
        VectorFieldJet([bad, good])


def test_linearization_matrix():
    phi = Jet.from_terms(2, 3, {(2, 0): 0.5, (2, 1): 1.0, (0, 2): 1.0})
    X = VectorFieldJet.from_gradient(phi)
    assert np.array_equal(X.linearization, np.array([[1.0, 0.0], [0.0, 2.0]]))


# -- evaluation and derivatives ------------------------------------------

def test_evaluate_matches_dict_oracle(rng):
    from conftest import dict_eval
    u = _random_scalar_jet(rng, 3, 3)
    for _ in range(5):
        pt = rng.uniform(-1, 1, size=3)
        assert np.isclose(u.evaluate(pt), dict_eval(jet_to_dict(u), pt))


def test_partial_derivative(rng):
    from conftest import dict_diff
    u = _random_scalar_jet(rng, 2, 4)
    got = jet_to_dict(u.partial(0))
    want = dict_truncate(dict_diff(jet_to_dict(u), 0), 3)
    assert dicts_close(got, want)


# -- JSON round-trips ------------------------------------------------------

def test_json_roundtrip_scalar(rng):
    u = _random_scalar_jet(rng, 2, 3)
    again = jet_from_json(json.loads(json.dumps(jet_to_json(u))))
    assert again == u


def test_json_roundtrip_complex():
    u = Jet.from_terms(2, 2, {(1, 0): 1 + 2j, (0, 2): -3j})
    obj = jet_to_json(u)
    assert obj["terms"][0]["coeff"] == {"re": 1.0, "im": 2.0}
    assert jet_from_json(obj) == u


def test_json_roundtrip_matrix(rng):
    M = Jet(2, 2, rng.standard_normal((P_dim(2, 2), 2, 2)))
    obj = json.loads(json.dumps(jet_to_json(M)))
    assert obj["shape"] == "matrix:2"
    assert jet_from_json(obj) == M


def test_json_omitted_terms_are_zero():
    obj = {"n": 2, "N": 2, "shape": "scalar",
           "terms": [{"alpha": [1, 0], "coeff": 3.0}]}
    u = jet_from_json(obj)
    assert u == Jet.from_terms(2, 2, {(1, 0): 3.0})

import math

import numpy as np
import pytest

from rittkit import (
    FiniteAbelianGroup,
    Measure,
    NormTag,
    PreconditionError,
    ProbabilityMeasure,
    Representation,
    StructuralError,
    average_operator,
    convolve,
    polynomial_push,
    powers_profile,
    transference_check,
)
from rittkit.funcalc import Polynomial, eval_poly_operator
from rittkit.groups import Integers
from rittkit.measures import square, symmetrize
from rittkit.operators import _eig_ritt_sup, convolution_operator
from rittkit.representations import random_unimodular_representation, transference_trials

Z4 = FiniteAbelianGroup.cyclic(4)


def random_rep(N, dim, seed):
    rng = np.random.default_rng(seed)
    U, V, D = random_unimodular_representation(N, dim, rng)
    return Representation(FiniteAbelianGroup.cyclic(N), [U]), rng


def test_average_examples():
    U = np.diag([1, 1j])
    pi = Representation(Z4, [U])
    assert np.allclose(average_operator(pi, Measure.dirac(Z4)).matrix, np.eye(2))
    assert np.allclose(average_operator(pi, Measure.dirac(Z4, 1)).matrix, U)
    half = ProbabilityMeasure(Z4, {0: 0.5, 1: 0.5})
    assert np.allclose(average_operator(pi, half).matrix, (np.eye(2) + U) / 2)


def test_representation_law_checked():
    with pytest.raises(PreconditionError):
        Representation(Z4, [np.diag([1, 1.1])])
    with pytest.raises(StructuralError):
        average_operator(Representation(Z4, [np.eye(2)]), Measure.dirac(FiniteAbelianGroup.cyclic(3)))
    with pytest.raises(PreconditionError):
        Representation(Integers(), V=np.eye(2), D=[1, 0.5])


def test_representation_law_holds():
    pi, _ = random_rep(6, 3, 11)
    for j in range(6):
        for k in range(6):
            assert np.allclose(pi(j) @ pi(k), pi(j + k), atol=1e-10)


def test_product_group_generators():
    G = FiniteAbelianGroup((2, 3))
    pi = Representation(G, [np.diag([1, -1]), np.diag([np.exp(2j * np.pi / 3), 1])])
    assert np.allclose(pi((1, 2)), np.diag([np.exp(4j * np.pi / 3), -1]))
    with pytest.raises(PreconditionError):
        Representation(G, [np.array([[0, 1], [1, 0]]), np.diag([np.exp(2j * np.pi / 3), 1])])


def test_integer_representation():
    V = np.array([[1, 1], [0, 1]], dtype=float)
    pi = Representation(Integers(), V=V, D=[1, -1])
    assert pi.norm_bound == pytest.approx(np.linalg.norm(V, 2) * np.linalg.norm(np.linalg.inv(V), 2))
    assert np.allclose(pi(3), pi(1) @ pi(1) @ pi(1))
    nu = ProbabilityMeasure(Integers(), {0: 0.5, 2: 0.5})
    assert np.allclose(average_operator(pi, nu).matrix, np.eye(2))


def test_fubini_identity(rng):
    pi, _ = random_rep(8, 4, 3)
    G = pi.group
    mu = ProbabilityMeasure.from_measure(Measure.from_weights(G, rng.dirichlet(np.ones(8))))
    nu = ProbabilityMeasure.from_measure(Measure.from_weights(G, rng.dirichlet(np.ones(8))))
    lhs = average_operator(pi, convolve(mu, nu)).matrix
    rhs = average_operator(pi, mu).matrix @ average_operator(pi, nu).matrix
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_polynomial_push_matches_calculus(rng):
    pi, _ = random_rep(5, 3, 9)
    nu = ProbabilityMeasure.from_measure(Measure.from_weights(pi.group, rng.dirichlet(np.ones(5))))
    phi = Polynomial(rng.standard_normal(6) + 1j * rng.standard_normal(6))
    S = average_operator(pi, nu)
    assert np.allclose(eval_poly_operator(phi, S).matrix, average_operator(pi, polynomial_push(phi, nu)).matrix,
                       atol=1e-9)


def test_transference_diagonal_example():
    # diag(1, i): the identity block keeps ||S|| = 1, and a probability convolution has norm 1
    pi = Representation(Z4, [np.diag([1, 1j])])
    rec = transference_check(pi, ProbabilityMeasure(Z4, {0: 0.5, 1: 0.5}))
    assert rec["lhs"] == pytest.approx(1) and rec["rhs"] == pytest.approx(1)
    assert rec["holds"] and rec["pi_norm"] == pytest.approx(1)
    # on the i-eigenline alone the average is (1 + i)/2, of norm sqrt(2)/2
    line = Representation(Z4, [np.array([[1j]])])
    assert transference_check(line, ProbabilityMeasure(Z4, {0: 0.5, 1: 0.5}))["lhs"] == pytest.approx(math.sqrt(2) / 2)


def test_transference_trivial_rep():
    pi = Representation(Z4, [np.eye(3)])
    rec = transference_check(pi, ProbabilityMeasure(Z4, {0: 0.25, 2: 0.75}))
    assert rec["lhs"] == pytest.approx(1) and rec["holds"]


def test_transference_with_signed_measures():
    # signed measures make the inequality non-trivial (rhs no longer 1)
    for seed in range(20):
        pi, rng = random_rep(8, 4, seed)
        nu = Measure.from_weights(pi.group, rng.standard_normal(8))
        rec = transference_check(pi, nu)
        assert rec["holds"] and rec["lhs"] <= rec["rhs"] + 1e-9


def test_transference_corpus():
    records = transference_trials(trials=30, seed=5)
    assert all(r["holds"] for r in records)
    assert len({r["seed"] for r in records}) == 30
    assert records == transference_trials(trials=30, seed=5)


def test_transference_mixed_p_is_conservative():
    pi, rng = random_rep(4, 2, 1)
    pi3 = Representation(pi.group, pi.generators, NormTag.lp(3, 2))
    rec = transference_check(pi3, ProbabilityMeasure(pi.group, {0: 0.5, 1: 0.5}), p=3, restarts=8)
    assert rec["rhs_certificate"] == "mesh-lower-bound"
    assert rec["holds"] or rec["review"]


def test_powers_profile_examples():
    pi, _ = random_rep(6, 3, 2)
    assert all(r["subordinated"] == 0 for r in powers_profile(pi, Measure.dirac(pi.group), 10))
    # unitary generator with a symmetric square: bounded by the exact circulant c1
    U = np.diag(np.exp(2j * np.pi * np.array([0, 1, 3, 5]) / 6))
    upi = Representation(pi.group, [U])
    eta = symmetrize(ProbabilityMeasure(pi.group, {0: 0.2, 1: 0.5, 2: 0.3}))
    nu = square(eta)
    c1 = float(np.max(_eig_ritt_sup(convolution_operator(nu, pi.group).eigenvalues)))
    rows = powers_profile(upi, nu, 40)
    assert max(r["subordinated"] for r in rows) <= upi.norm_bound**2 * c1 + 1e-9
    assert all(r["subordinated"] <= r["convolution_bound"] + 1e-9 for r in rows)
    # -1 in the spectrum with nu = delta_1: linear growth with slope |(-1) - 1| = 2
    flip = Representation(FiniteAbelianGroup.cyclic(2), [np.diag([1, -1])])
    grow = powers_profile(flip, Measure.dirac(flip.group, 1), 20)
    assert [r["subordinated"] for r in grow] == pytest.approx([2 * n for n in range(1, 21)])

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rittkit import (
    ConfigurationError,
    FiniteAbelianGroup,
    Measure,
    PreconditionError,
    ProbabilityMeasure,
    StructuralError,
    convolve,
    fourier_symbol,
    is_symmetric,
    polynomial_push,
    square,
    symmetrize,
)
from rittkit.funcalc import Polynomial
from rittkit.groups import Integers
from rittkit.measures import convolution_power

from oracles import convolve_atoms, symbol_fft

Z = Integers()


def on_z(atoms):
    return Measure(Z, atoms)


def test_dirac_convolution():
    G = FiniteAbelianGroup((3, 4))
    assert convolve(Measure.dirac(G, (1, 3)), Measure.dirac(G, (2, 2))).allclose(Measure.dirac(G, (0, 1)))
    assert convolve(on_z({-3: 1}), on_z({5: 1})).allclose(on_z({2: 1}))


def test_convolution_on_z_example():
    eta = ProbabilityMeasure(Z, {-1: 0.5, 1: 0.5})
    nu = convolve(eta, eta)
    assert isinstance(nu, ProbabilityMeasure)
    assert nu.allclose(on_z({-2: 0.25, 0: 0.5, 2: 0.25}))


def test_convolution_unit_and_carrier_mismatch(rng):
    G = FiniteAbelianGroup.cyclic(5)
    nu = Measure.from_weights(G, rng.standard_normal(5) + 1j * rng.standard_normal(5))
    assert convolve(nu, Measure.dirac(G)).allclose(nu)
    with pytest.raises(StructuralError):
        convolve(nu, Measure.dirac(FiniteAbelianGroup.cyclic(4)))


def test_symmetry_examples():
    assert is_symmetric(Measure.dirac(Z))
    d1 = ProbabilityMeasure(Z, {1: 1.0})
    assert not is_symmetric(d1)
    assert symmetrize(d1).allclose(on_z({-1: 0.5, 1: 0.5}))
    assert is_symmetric(on_z({-2: 0.25, 0: 0.5, 2: 0.25}))


def test_square_examples():
    assert square(Measure.dirac(Z)).allclose(Measure.dirac(Z))
    eta = ProbabilityMeasure(Z, {-1: 0.5, 1: 0.5})
    nu = square(eta)
    sym = fourier_symbol(nu, 256)
    assert np.allclose(sym.values, np.cos(sym.thetas) ** 2, atol=1e-14)
    Z2 = FiniteAbelianGroup.cyclic(2)
    assert np.allclose(fourier_symbol(square(ProbabilityMeasure.uniform(Z2))).values, [1, 0], atol=1e-15)


def test_square_rejects_asymmetric():
    with pytest.raises(PreconditionError) as info:
        square(ProbabilityMeasure(Z, {0: 0.5, 1: 0.5}))
    assert info.value.witness in (0, 1)


def test_symbol_examples():
    N = 7
    G = FiniteAbelianGroup.cyclic(N)
    assert np.allclose(fourier_symbol(Measure.dirac(G)).values, 1)
    u = fourier_symbol(ProbabilityMeasure.uniform(G)).values
    assert u[0] == pytest.approx(1) and np.allclose(u[1:], 0, atol=1e-14)
    coin = ProbabilityMeasure(FiniteAbelianGroup.cyclic(2), {0: 0.5, 1: 0.5})
    assert np.allclose(fourier_symbol(coin).values, [1, 0], atol=1e-15)


def test_torus_grid_and_certificate():
    nu = ProbabilityMeasure(Z, {-2: 0.25, 0: 0.5, 3: 0.25})
    sym = fourier_symbol(nu, 128)
    assert sym.kind == "torus-grid" and sym.grid_size == 128
    assert sym.lipschitz_bound == pytest.approx(0.25 * 2 + 0.25 * 3)
    assert sym.epsilon == pytest.approx(1.25 * math.pi / 128)
    # certified: true values between grid points are within epsilon of a grid value
    fine = np.linspace(0, 2 * math.pi, 5000, endpoint=False)
    nearest = np.rint(fine / (2 * math.pi / 128)).astype(int) % 128
    assert np.all(np.abs(sym.evaluate(fine) - sym.values[nearest]) <= sym.epsilon)
    with pytest.raises(ConfigurationError):
        fourier_symbol(nu, 10)


def test_polynomial_push_examples(rng):
    G = FiniteAbelianGroup.cyclic(6)
    w = rng.uniform(size=6)
    nu = ProbabilityMeasure.from_measure(Measure.from_weights(G, w / w.sum()))
    assert polynomial_push([0, 0, 1], nu).allclose(convolve(nu, nu))
    assert polynomial_push([1], nu).allclose(Measure.dirac(G))
    Z2 = FiniteAbelianGroup.cyclic(2)
    u = ProbabilityMeasure.uniform(Z2)
    phi2 = Polynomial.phi(2)
    pushed = polynomial_push(phi2, u)
    # atoms by hand: 2 u*u - 2 u = 2u - 2u = 0 since u*u = u
    assert pushed.allclose(Measure(Z2, {}))
    assert np.allclose(fourier_symbol(pushed).values, phi2(fourier_symbol(u).values), atol=1e-12)


def test_probability_validation():
    with pytest.raises(PreconditionError):
        ProbabilityMeasure(Z, {0: 1.5, 1: -0.5})
    with pytest.raises(PreconditionError):
        ProbabilityMeasure(Z, {0: 1j})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        p = ProbabilityMeasure(Z, {0: 0.5, 1: 0.5 + 1e-6})
    assert p.drift_flagged and caught
    assert p.total_mass() == pytest.approx(1, abs=1e-15)
    quiet = ProbabilityMeasure(Z, {0: 0.5, 1: 0.5 + 1e-11})
    assert not quiet.drift_flagged and quiet.total_mass() == pytest.approx(1, abs=1e-15)


def test_serialisation_round_trip(rng):
    G = FiniteAbelianGroup((2, 3))
    nu = Measure.from_weights(G, rng.standard_normal(6) + 1j * rng.standard_normal(6))
    assert Measure.from_dict(nu.to_dict()).allclose(nu, 0)
    mz = on_z({-4: 0.25, 7: 0.75j})
    assert Measure.from_dict(mz.to_dict()).allclose(mz, 0)


def test_zero_atoms_pruned():
    assert on_z({0: 0.0, 1: 1.0}).support() == [1]


# property tests -------------------------------------------------------------------

cyclic_orders = st.lists(st.integers(1, 5), min_size=1, max_size=2).map(tuple)


@st.composite
def measure_pairs(draw):
    f = draw(cyclic_orders)
    G = FiniteAbelianGroup(f)
    floats = st.floats(-1, 1, allow_nan=False)
    w1 = np.array(draw(st.lists(floats, min_size=G.order, max_size=G.order)))
    w2 = np.array(draw(st.lists(floats, min_size=G.order, max_size=G.order)))
    return G, Measure.from_weights(G, w1), Measure.from_weights(G, w2)


@given(measure_pairs())
def test_convolution_matches_double_sum_and_symbol_product(data):
    G, mu, nu = data
    conv = convolve(mu, nu)
    ref = convolve_atoms(mu.atoms, nu.atoms, G.add)
    assert conv.allclose(Measure(G, ref), 1e-12)
    s = fourier_symbol(conv).values
    assert np.allclose(s, fourier_symbol(mu).values * fourier_symbol(nu).values, atol=1e-10)
    assert np.allclose(fourier_symbol(mu).values, symbol_fft(mu.weights(), G.factors), atol=1e-10)
    assert conv.total_variation() <= mu.total_variation() * nu.total_variation() + 1e-12


@given(measure_pairs())
def test_symmetric_iff_real_symbol(data):
    G, mu, _ = data
    sym = fourier_symbol(mu).values
    assert is_symmetric(mu, 1e-10) == bool(np.all(np.abs(sym.imag) <= 1e-10))
    s = fourier_symbol(mu + mu.reflect()).values
    assert np.all(np.abs(s.imag) <= 1e-10)


@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_square_symbol_in_unit_interval(N, seed):
    r = np.random.default_rng(seed)
    G = FiniteAbelianGroup.cyclic(N)
    eta = symmetrize(ProbabilityMeasure.from_measure(Measure.from_weights(G, r.dirichlet(np.ones(N)))))
    nu = square(eta)
    assert isinstance(nu, ProbabilityMeasure) and nu.is_probability()
    s = fourier_symbol(nu).values
    assert np.all(np.abs(s.imag) <= 1e-10)
    assert np.all(s.real >= -1e-10) and np.all(s.real <= 1 + 1e-10)


@given(st.integers(2, 9), st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False), min_size=1, max_size=5),
       st.integers(0, 2**32 - 1))
def test_polynomial_push_symbol(N, coeffs, seed):
    r = np.random.default_rng(seed)
    G = FiniteAbelianGroup.cyclic(N)
    nu = ProbabilityMeasure.from_measure(Measure.from_weights(G, r.dirichlet(np.ones(N))))
    pushed = polynomial_push(coeffs, nu)
    expected = np.polynomial.polynomial.polyval(symbol_fft(nu.weights(), (N,)), coeffs)
    assert np.allclose(fourier_symbol(pushed).values, expected, atol=1e-10)


def test_convolution_power_matches_repeated_convolution(rng):
    G = FiniteAbelianGroup.cyclic(5)
    nu = ProbabilityMeasure.from_measure(Measure.from_weights(G, rng.dirichlet(np.ones(5))))
    assert convolution_power(nu, 3).allclose(convolve(nu, convolve(nu, nu)))
    assert convolution_power(nu, 0).allclose(Measure.dirac(G))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rittkit import (
    ConfigurationError,
    FiniteAbelianGroup,
    InvalidSymbolError,
    Measure,
    ProbabilityMeasure,
    StolzDomain,
    bar_constant,
    fourier_symbol,
    minimal_stolz_angle,
    phi_n_sup,
    stolz_boundary,
    stolz_contains,
    stolz_ratio_constant,
)
from rittkit.groups import Integers
from rittkit.measures import Symbol, square, symmetrize
from rittkit.stolz import EXACT, GRID, MESH, Sector, boundary_point, point_stolz_angles, sector_contains

from oracles import hull_distance


def finite_symbol(values):
    values = np.asarray(values, dtype=complex)
    return Symbol(FiniteAbelianGroup.cyclic(len(values)), values)


def test_contains_examples():
    assert stolz_contains(math.pi / 6, 0.3)
    assert not stolz_contains(math.pi / 6, 0.9j)
    for g in (0.1, 0.7, 1.5):
        assert stolz_contains(g, 1.0)
    assert 0.3 in StolzDomain(math.pi / 6)


def test_angle_validation():
    for bad in (0, math.pi / 2, -0.1, 2.0):
        with pytest.raises(ConfigurationError):
            stolz_contains(bad, 0.0)
    with pytest.raises(ConfigurationError):
        Sector(math.pi)


def test_sector_examples():
    assert sector_contains(math.pi / 4, 1)
    assert not sector_contains(math.pi / 4, 1j)
    assert sector_contains(math.pi / 2, 1 + 1j)
    assert sector_contains(0.3, 0)
    assert (1 + 0.1j) in Sector(0.5)


@pytest.mark.parametrize("gamma", [math.pi / 12, math.pi / 6, math.pi / 4, math.pi / 3])
def test_contains_agrees_with_hull_oracle(gamma, rng):
    z = rng.uniform(-1.2, 1.2, 20000) + 1j * rng.uniform(-1.2, 1.2, 20000)
    d = hull_distance(z, math.sin(gamma))
    ours = stolz_contains(gamma, z)
    clear = np.abs(d) > 1e-9
    assert np.array_equal(ours[clear], (d <= 0)[clear])


def test_boundary_lies_on_the_hull_boundary():
    for gamma in (0.2, 0.8, 1.3):
        pts = stolz_boundary(gamma, 512)
        assert np.max(np.abs(hull_distance(pts, math.sin(gamma)))) < 1e-9
        assert pts[0] == pytest.approx(1) and pts[-1] == pytest.approx(1)
        assert boundary_point(gamma, 1.5) == pytest.approx(-math.sin(gamma))


def test_ratio_constant_examples():
    # frozen from the dense-mesh oracle; the sup sits at z = -sin(gamma)
    assert stolz_ratio_constant(math.pi / 6).value == pytest.approx(3.0, abs=1e-6)
    c4 = stolz_ratio_constant(math.pi / 4)
    assert c4.certificate == MESH
    assert c4.value == pytest.approx(5.828427124746, abs=1e-6)
    grid = np.linspace(0.05, 1.5, 12)
    values = [stolz_ratio_constant(g).value for g in grid]
    assert all(v >= 1 for v in values)
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_bar_examples():
    coin = bar_constant(finite_symbol([1, 0]))
    assert coin.constant == 1 and not coin.fails and coin.certificate == EXACT and coin.witnesses
    delta = bar_constant(finite_symbol([1, 1, 1]))
    assert delta.constant == 1 and not delta.fails
    shift = bar_constant(finite_symbol([1, -1]))
    assert shift.fails and math.isinf(shift.constant)
    with pytest.raises(InvalidSymbolError):
        bar_constant(finite_symbol([1, 1.1]))


def test_bar_value_oracle():
    vals = np.array([1, 0.5 + 0.3j, -0.2, 0.1j])
    expected = max(abs(1 - v) / (1 - abs(v)) for v in vals[1:])
    assert bar_constant(finite_symbol(vals)).constant == pytest.approx(expected, rel=1e-14)


def test_minimal_angle_examples():
    assert minimal_stolz_angle(finite_symbol([1, 0.5])).gamma == 0
    assert minimal_stolz_angle(finite_symbol([0.5j])).gamma == pytest.approx(math.pi / 6, abs=1e-9)
    rep = minimal_stolz_angle(finite_symbol([1, -1]))
    assert rep.fails and rep.witness == [1]


@given(st.complex_numbers(max_magnitude=0.999, allow_nan=False))
def test_point_angle_is_the_boundary_of_membership(z):
    g = float(point_stolz_angles(np.array([z]))[0])
    if g > 1e-8:
        assert stolz_contains(min(g + 1e-7, math.pi / 2 - 1e-12), z)
        assert not stolz_contains(g - 1e-7, z)


def test_torus_bar_and_angle():
    nu = ProbabilityMeasure(Integers(), {-1: 0.25, 0: 0.5, 1: 0.25})
    sym = fourier_symbol(nu)
    bar = bar_constant(sym)
    assert bar.certificate == GRID and not bar.fails
    assert bar.constant == pytest.approx(1, abs=1e-9)
    # refinement stops at eps < 1e-6 or at the 2^20 grid cap
    assert bar.epsilon <= max(1e-6, sym.lipschitz_bound * math.pi / 2**20)
    assert minimal_stolz_angle(sym).gamma == 0
    shift = fourier_symbol(ProbabilityMeasure(Integers(), {1: 1.0}))
    assert bar_constant(shift).fails and minimal_stolz_angle(shift).fails


def test_lazy_walk_on_z_is_flagged_unbounded():
    # (1 + e^{i theta}) / 2 is tangent to the unit circle at 1: the ratio blows up like 1/theta
    nu = ProbabilityMeasure(Integers(), {0: 0.5, 1: 0.5})
    rep = bar_constant(fourier_symbol(nu))
    assert not rep.certified and rep.meta["unbounded_suspected"]
    assert rep.constant > 1e5


def test_phi_n_examples():
    for gamma in (0.3, math.pi / 4, 1.2):
        assert phi_n_sup(1, gamma).value == pytest.approx(1 + math.sin(gamma), abs=1e-9)
    C = stolz_ratio_constant(math.pi / 4).value
    values = [phi_n_sup(n, math.pi / 4).value for n in (2, 10, 100, 1000, 10000)]
    assert max(values) <= C
    # large-n limit of sup |phi_n| near 1 along the tangent segments is 1 / (e cos gamma)
    assert values[-1] == pytest.approx(1 / (math.e * math.cos(math.pi / 4)), abs=1e-3)


def test_bar_and_angle_agree_on_corpus(rng):
    for N in range(2, 12):
        G = FiniteAbelianGroup.cyclic(N)
        for _ in range(5):
            k = int(rng.integers(1, N + 1))
            pts = rng.choice(N, size=k, replace=False)
            w = rng.dirichlet(np.ones(k))
            nu = ProbabilityMeasure(G, {int(p): float(x) for p, x in zip(pts, w)})
            sym = fourier_symbol(nu)
            assert bar_constant(sym).finite == (minimal_stolz_angle(sym).gamma < math.pi / 2)


def test_square_symbols_have_unit_bar(rng):
    for N in (3, 8, 13):
        G = FiniteAbelianGroup.cyclic(N)
        eta = symmetrize(ProbabilityMeasure.from_measure(Measure.from_weights(G, rng.dirichlet(np.ones(N)))))
        assert bar_constant(fourier_symbol(square(eta))).constant <= 1 + 1e-9

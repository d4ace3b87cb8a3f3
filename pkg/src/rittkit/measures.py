"""Finitely supported measures on a finite abelian group or on the integers."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .exceptions import ConfigurationError, PreconditionError, StructuralError
from .groups import FiniteAbelianGroup, Integers

PRUNE_TOL = 0.0
SYMMETRY_TOL = 1e-12
MIN_GRID = 64
DEFAULT_GRID = 4096
MAX_GRID = 2**20


class Measure:
    """A complex measure with finitely many atoms.

    ``atoms`` maps support points (reduced group tuples, or ints on Z) to
    complex weights.  Exactly-zero weights are dropped.
    """

    def __init__(self, carrier, atoms):
        if not isinstance(carrier, (FiniteAbelianGroup, Integers)):
            raise StructuralError(f"unsupported carrier {carrier!r}")
        self.carrier = carrier
        clean = {}
        for point, w in dict(atoms).items():
            key = self._key(point)
            clean[key] = clean.get(key, 0j) + complex(w)
        self.atoms = {k: w for k, w in sorted(clean.items()) if abs(w) > PRUNE_TOL}

    def _key(self, point):
        if isinstance(self.carrier, Integers):
            if isinstance(point, (tuple, list)):
                (point,) = point
            if int(point) != point:
                raise StructuralError(f"integer support point expected, got {point!r}")
            return int(point)
        return self.carrier.reduce(point)

    # constructors -----------------------------------------------------------

    @classmethod
    def dirac(cls, carrier, point=None):
        """Unit mass at ``point`` (the identity element by default)."""
        if point is None:
            point = carrier.identity if isinstance(carrier, FiniteAbelianGroup) else 0
        return cls(carrier, {point: 1.0})

    @classmethod
    def from_weights(cls, G, weights):
        """Measure on ``G`` from a dense weight vector in flat element order."""
        weights = np.asarray(weights, dtype=complex).ravel()
        if weights.size != G.order:
            raise StructuralError(f"expected {G.order} weights, got {weights.size}")
        return cls(G, {G.element(i): w for i, w in enumerate(weights) if w != 0})

    # basic algebra ----------------------------------------------------------

    @property
    def is_finite_group(self):
        return isinstance(self.carrier, FiniteAbelianGroup)

    def weights(self):
        """Dense weight vector in flat element order (finite carriers only)."""
        if not self.is_finite_group:
            raise StructuralError("dense weights exist only on finite groups")
        w = np.zeros(self.carrier.order, dtype=complex)
        for point, weight in self.atoms.items():
            w[self.carrier.index(point)] = weight
        return w

    def total_variation(self):
        return float(sum(abs(w) for w in self.atoms.values()))

    def total_mass(self):
        return complex(sum(self.atoms.values(), 0j))

    def is_real(self, tol=0.0):
        return all(abs(w.imag) <= tol for w in self.atoms.values())

    def is_probability(self, tol=1e-12):
        return (
            all(abs(w.imag) <= tol and w.real >= -tol for w in self.atoms.values())
            and abs(self.total_mass() - 1) <= tol
        )

    def reflect(self):
        """Image under t -> -t."""
        if self.is_finite_group:
            return Measure(self.carrier, {self.carrier.neg(t): w for t, w in self.atoms.items()})
        return Measure(self.carrier, {-t: w for t, w in self.atoms.items()})

    def _check_same(self, other):
        if self.carrier != other.carrier:
            raise StructuralError(f"carrier mismatch: {self.carrier!r} vs {other.carrier!r}")

    def __add__(self, other):
        self._check_same(other)
        atoms = dict(self.atoms)
        for t, w in other.atoms.items():
            atoms[t] = atoms.get(t, 0j) + w
        return Measure(self.carrier, atoms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return Measure(self.carrier, {t: c * w for t, w in self.atoms.items()})

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def allclose(self, other, tol=1e-12):
        self._check_same(other)
        keys = set(self.atoms) | set(other.atoms)
        return all(abs(self.atoms.get(k, 0) - other.atoms.get(k, 0)) <= tol for k in keys)

    def support(self):
        return list(self.atoms)

    def __repr__(self):
        body = ", ".join(f"{t}: {w:.6g}" for t, w in self.atoms.items())
        return f"{type(self).__name__}({self.carrier!r}, {{{body}}})"

    # serialization ----------------------------------------------------------

    def to_dict(self):
        def point(t):
            return list(t) if isinstance(t, tuple) else t

        return {
            "carrier": self.carrier.to_descriptor(),
            "atoms": [[point(t), w.real, w.imag] for t, w in self.atoms.items()],
        }

    @classmethod
    def from_dict(cls, data):
        carrier = data["carrier"]
        carrier = Integers() if carrier in ("Z", "integers") else FiniteAbelianGroup.from_descriptor(carrier)
        atoms = {}
        for entry in data["atoms"]:
            point, re = entry[0], entry[1]
            im = entry[2] if len(entry) > 2 else 0.0
            key = tuple(point) if isinstance(point, list) else point
            atoms[key] = atoms.get(key, 0j) + complex(re, im)
        return cls(carrier, atoms)


class ProbabilityMeasure(Measure):
    """Nonnegative measure of total mass one.

    Mass drift up to 1e-12 is tolerated; larger drift is renormalised, and
    drift above 1e-9 also sets ``drift_flagged`` and emits a warning.
    """

    def __init__(self, carrier, atoms):
        super().__init__(carrier, atoms)
        if not self.atoms:
            raise PreconditionError("probability measure with empty support")
        for t, w in self.atoms.items():
            if abs(w.imag) > SYMMETRY_TOL or w.real < -SYMMETRY_TOL:
                raise PreconditionError(f"negative or complex weight {w} at {t}", witness=t)
        self.atoms = {t: complex(max(w.real, 0.0)) for t, w in self.atoms.items() if w.real > 0}
        mass = sum(w.real for w in self.atoms.values())
        drift = abs(mass - 1.0)
        self.drift_flagged = drift > 1e-9
        if self.drift_flagged:
            warnings.warn(f"probability mass drift {drift:.3g}; renormalised", stacklevel=2)
        if drift > 1e-12:
            self.atoms = {t: w / mass for t, w in self.atoms.items()}

    @classmethod
    def from_measure(cls, measure):
        return cls(measure.carrier, measure.atoms)

    @classmethod
    def uniform(cls, G):
        return cls(G, {g: 1.0 / G.order for g in G.elements()})


def as_probability(measure):
    if isinstance(measure, ProbabilityMeasure):
        return measure
    return ProbabilityMeasure.from_measure(measure)


def convolve(mu, nu):
    """Convolution ``mu * nu``; probability inputs give a probability output."""
    mu._check_same(nu)
    atoms = {}
    if mu.is_finite_group:
        G = mu.carrier
        for s, a in mu.atoms.items():
            for t, b in nu.atoms.items():
                key = G.add(s, t)
                atoms[key] = atoms.get(key, 0j) + a * b
    else:
        for s, a in mu.atoms.items():
            for t, b in nu.atoms.items():
                atoms[s + t] = atoms.get(s + t, 0j) + a * b
    if isinstance(mu, ProbabilityMeasure) and isinstance(nu, ProbabilityMeasure):
        return ProbabilityMeasure(mu.carrier, atoms)
    return Measure(mu.carrier, atoms)


def is_symmetric(nu, tol=SYMMETRY_TOL):
    return nu.allclose(nu.reflect(), tol)


def symmetrize(nu):
    """Return (nu + nu o (-1)) / 2."""
    nu = as_probability(nu)
    return ProbabilityMeasure(nu.carrier, (nu.scale(0.5) + nu.reflect().scale(0.5)).atoms)


def square(eta):
    """``eta * eta`` for a symmetric probability measure ``eta``."""
    eta = as_probability(eta)
    if not is_symmetric(eta):
        worst = max(
            eta.atoms,
            key=lambda t: abs(eta.atoms.get(t, 0) - eta.reflect().atoms.get(t, 0)),
        )
        raise PreconditionError(
            f"square() needs a symmetric measure; mass at {worst} differs from its mirror",
            witness=worst,
        )
    return convolve(eta, eta)


def convolution_power(nu, k):
    result = Measure.dirac(nu.carrier)
    if isinstance(nu, ProbabilityMeasure):
        result = ProbabilityMeasure(nu.carrier, result.atoms)
    for _ in range(k):
        result = convolve(result, nu)
    return result


def polynomial_push(phi, nu):
    """Signed measure ``sum_j a_j nu^{*j}`` for ``phi(z) = sum_j a_j z^j``."""
    coeffs = np.asarray(getattr(phi, "coefficients", phi), dtype=complex).ravel()
    out = Measure(nu.carrier, {})
    power = Measure.dirac(nu.carrier)
    for j, a in enumerate(coeffs):
        if j:
            power = convolve(power, nu)
        if a != 0:
            out = out + power.scale(a)
    return Measure(nu.carrier, out.atoms)


# Fourier symbols ---------------------------------------------------------------


@dataclass
class Symbol:
    """Fourier transform values of a measure.

    ``kind`` is ``"finite-dual"`` (values indexed by flat dual index, exact)
    or ``"torus-grid"`` (values at ``thetas``; the true symbol is within
    ``epsilon`` of the grid values between neighbouring grid points).
    """

    carrier: object
    values: np.ndarray
    kind: str = "finite-dual"
    thetas: np.ndarray = None
    lipschitz_bound: float = 0.0
    measure: Measure = field(default=None, repr=False)

    @property
    def grid_size(self):
        return None if self.thetas is None else len(self.thetas)

    @property
    def epsilon(self):
        """Certified deviation bound between grid points (0 for finite duals)."""
        if self.kind == "finite-dual":
            return 0.0
        return self.lipschitz_bound * math.pi / self.grid_size

    def evaluate(self, thetas):
        """Evaluate a torus symbol at arbitrary angles."""
        if self.kind != "torus-grid":
            raise StructuralError("only torus symbols can be evaluated off-grid")
        return torus_values(self.measure, thetas)

    def witness(self, i):
        """Human-readable location of value number ``i``."""
        if self.kind == "finite-dual":
            return list(self.carrier.element(i))
        return float(self.thetas[i])

    def to_dict(self):
        return {
            "kind": self.kind,
            "re": [float(v.real) for v in self.values],
            "im": [float(v.imag) for v in self.values],
            "lipschitz_bound": float(self.lipschitz_bound),
            "epsilon": float(self.epsilon),
        }


def torus_values(nu, thetas):
    thetas = np.asarray(thetas, dtype=float)
    ks = np.array(list(nu.atoms), dtype=float)
    ws = np.array(list(nu.atoms.values()), dtype=complex)
    if ks.size == 0:
        return np.zeros_like(thetas, dtype=complex)
    return np.exp(1j * np.multiply.outer(thetas, ks)) @ ws


def fourier_symbol(nu, resolution=None):
    """Symbol ``xi -> sum_t nu({t}) chi_xi(t)``.

    On a finite group every dual index is enumerated.  On Z the symbol is
    sampled at ``theta_j = 2 pi j / M`` (``M = resolution``, default 4096)
    and carries the Lipschitz bound ``sum |k| |c_k|``.
    """
    if nu.is_finite_group:
        G = nu.carrier
        values = G.character_table @ nu.weights()
        return Symbol(G, values, "finite-dual", measure=nu)
    M = DEFAULT_GRID if resolution is None else int(resolution)
    if M < MIN_GRID:
        raise ConfigurationError(f"torus grid size M={M} must be >= {MIN_GRID}")
    if M > MAX_GRID:
        raise ConfigurationError(f"torus grid size M={M} exceeds cap {MAX_GRID}")
    thetas = 2 * np.pi * np.arange(M) / M
    lip = float(sum(abs(k) * abs(w) for k, w in nu.atoms.items()))
    return Symbol(nu.carrier, torus_values(nu, thetas), "torus-grid", thetas, lip, nu)

"""Polynomial functional calculus and H-infinity(B_gamma) ratio estimates."""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_stolz_angle
from .exceptions import PreconditionError
from .operators import SPECTRAL_TOL, operator_norm, spectrum
from .stolz import MESH, Certified, _mesh_sup, point_stolz_angles

DEFAULT_RANDOM_DRAWS = 256
DEFAULT_RANDOM_DEGREE = 32


@dataclass(frozen=True, eq=False)
class Polynomial:
    """``sum_k coefficients[k] z^k`` with trailing zero coefficients pruned."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.coefficients)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coefficients, other.coefficients)

    def to_list(self):
        return [[float(a.real), float(a.imag)] for a in self.coefficients]

    @classmethod
    def constant(cls, c):
        return cls([c])

    @classmethod
    def monomial(cls, n):
        c = np.zeros(n + 1, dtype=complex)
        c[n] = 1
        return cls(c)

    @classmethod
    def phi(cls, n):
        """``n (z^n - z^(n-1))``."""
        c = np.zeros(n + 1, dtype=complex)
        c[n], c[n - 1] = n, -n
        return cls(c)

    @classmethod
    def cesaro(cls, n):
        """``(1 + z + ... + z^n) / (n + 1)``."""
        return cls(np.full(n + 1, 1.0 / (n + 1), dtype=complex))

    @classmethod
    def random(cls, degree, rng):
        """Coefficients uniform on the complex unit disc."""
        r = np.sqrt(rng.uniform(size=degree + 1))
        t = rng.uniform(0, 2 * np.pi, size=degree + 1)
        return cls(r * np.exp(1j * t))


def eval_poly_operator(phi, T):
    """``phi(T)`` by Horner's scheme; closed-form spectrum is carried along."""
    phi = phi if isinstance(phi, Polynomial) else Polynomial(phi)
    I = np.eye(T.dim, dtype=complex)
    R = phi.coefficients[-1] * I
    for a in phi.coefficients[-2::-1]:
        R = R @ T.matrix + a * I
    eig = None if T.eigenvalues is None else phi(T.eigenvalues)
    return T.with_matrix(R, eigenvalues=eig, normal=T.normal)


def sup_on_stolz(phi, gamma, mesh=512, tol=1e-8):
    """``sup_{B_gamma} |phi|`` over the boundary (maximum modulus principle).

    The boundary mesh is refined by 4 until two successive values agree to
    ``tol``; each level zooms in on the local maxima.
    """
    gamma = check_stolz_angle(gamma)
    phi = phi if isinstance(phi, Polynomial) else Polynomial(phi)
    if phi.degree == 0:
        return Certified(float(abs(phi.coefficients[0])), MESH, {"gamma": gamma})

    def modulus(z):
        return np.abs(phi(z))

    previous = None
    n = mesh
    for _ in range(4):
        value, _, _ = _mesh_sup(modulus, gamma, tol, n, max(n // 2, 8))
        if previous is not None and abs(value - previous) < tol:
            break
        previous, n = value, 4 * n
    value = max(value, previous or 0.0)
    return Certified(value, MESH, {"gamma": gamma, "mesh": n})


@dataclass
class CalculusReport:
    gamma: float
    ratio: float
    witness: Polynomial
    family_size: int
    family_best: dict = field(default_factory=dict)
    seed: int = 0
    certificate: str = "lower-bound"

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "ratio": self.ratio,
            "witness": self.witness.to_list(),
            "family_size": self.family_size,
            "family_best": self.family_best,
            "seed": self.seed,
            "certificate": self.certificate,
        }


def polynomial_family(nmax=64, n_random=DEFAULT_RANDOM_DRAWS, degree=DEFAULT_RANDOM_DEGREE, seed=0):
    """Named test family: monomials, phi_n, Cesaro means and random polynomials."""
    rng = np.random.default_rng(seed)
    fam = [("monomial", Polynomial.monomial(n)) for n in range(nmax + 1)]
    fam += [("phi", Polynomial.phi(n)) for n in range(1, nmax + 1)]
    fam += [("cesaro", Polynomial.cesaro(n)) for n in range(1, nmax + 1)]
    fam += [("random", Polynomial.random(int(rng.integers(1, degree + 1)), rng)) for _ in range(n_random)]
    return fam


def check_stolz_spectrum(T, gamma, tol=1e-9):
    """Raise unless every eigenvalue of ``T`` lies in the closure of B_gamma (within ``tol``)."""
    eig = spectrum(T)
    mod = np.abs(eig)
    if np.any(mod > 1 + SPECTRAL_TOL):
        w = complex(eig[np.argmax(mod)])
        raise PreconditionError(f"eigenvalue {w} lies outside the unit disc", witness=w)
    clipped = np.where(mod > 1, eig / np.where(mod > 1, mod, 1), eig)
    angles = point_stolz_angles(clipped)
    bad = np.flatnonzero(angles > gamma + tol)
    if bad.size:
        w = complex(eig[bad[np.argmax(angles[bad])]])
        raise PreconditionError(f"eigenvalue {w} is outside the closed Stolz domain of angle {gamma:.6g}", witness=w)


def hinf_ratio(T, gamma, nmax=64, n_random=DEFAULT_RANDOM_DRAWS, degree=DEFAULT_RANDOM_DEGREE, seed=0,
               family=None, restarts=8):
    """Best observed ``||phi(T)|| / sup_{B_gamma} |phi|`` over a polynomial family.

    This bounds the H-infinity(B_gamma) calculus constant of ``T`` from
    below; it never certifies an upper bound.
    """
    gamma = check_stolz_angle(gamma)
    check_stolz_spectrum(T, gamma)
    if family is None:
        family = polynomial_family(nmax, n_random, degree, seed)
    best, witness, per = -math.inf, None, {}
    for name, phi in family:
        denom = sup_on_stolz(phi, gamma).value
        if denom <= 0:
            continue
        if T.exact_l2:
            num = float(np.max(np.abs(phi(spectrum(T)))))
        else:
            num = operator_norm(eval_poly_operator(phi, T), restarts=restarts, seed=seed).value
        r = num / denom
        per[name] = max(per.get(name, -math.inf), r)
        if r > best:
            best, witness = r, phi
    return CalculusReport(gamma, best, witness, len(family), per, seed)

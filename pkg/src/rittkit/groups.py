"""Finite abelian groups Z_{N_1} x ... x Z_{N_d} and their characters.

Elements and dual indices are plain integer tuples reduced modulo the
factor orders.  The dual group is identified with the group itself, the
pairing being ``exp(2*pi*i * sum_j k_j xi_j / N_j)``.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from .exceptions import ConfigurationError, StructuralError


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Product of cyclic groups with the given orders."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(int(n) for n in self.factors)
        if not factors:
            raise ConfigurationError("a group needs at least one cyclic factor")
        if any(n < 1 for n in factors):
            raise ConfigurationError(f"cyclic orders must be >= 1, got {factors}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def cyclic(cls, n):
        return cls((n,))

    @property
    def order(self):
        return int(np.prod(self.factors))

    @property
    def rank(self):
        return len(self.factors)

    def __len__(self):
        return self.order

    def reduce(self, g):
        """Normalise ``g`` (int for a cyclic group, or a tuple) to a reduced tuple."""
        if isinstance(g, (int, np.integer)):
            g = (int(g),)
        g = tuple(int(k) for k in g)
        if len(g) != self.rank:
            raise StructuralError(f"element {g} does not match group factors {self.factors}")
        return tuple(k % n for k, n in zip(g, self.factors))

    def elements(self):
        """All elements in row-major (flat index) order."""
        return [tuple(e) for e in itertools.product(*(range(n) for n in self.factors))]

    @property
    def identity(self):
        return (0,) * self.rank

    def add(self, g, h):
        g, h = self.reduce(g), self.reduce(h)
        return tuple((a + b) % n for a, b, n in zip(g, h, self.factors))

    def neg(self, g):
        return tuple((-k) % n for k, n in zip(self.reduce(g), self.factors))

    def index(self, g):
        return int(np.ravel_multi_index(self.reduce(g), self.factors))

    def element(self, idx):
        return tuple(int(k) for k in np.unravel_index(int(idx), self.factors))

    def character(self, xi, t):
        xi, t = self.reduce(xi), self.reduce(t)
        phase = sum(a * b / n for a, b, n in zip(xi, t, self.factors))
        return complex(np.exp(2j * np.pi * phase))

    @cached_property
    def _coords(self):
        # (order, rank) array of element coordinates in flat order
        return np.array(self.elements(), dtype=np.int64).reshape(self.order, self.rank)

    @cached_property
    def addition_table(self):
        """``table[i, j]`` is the flat index of element_i + element_j."""
        c = self._coords
        s = (c[:, None, :] + c[None, :, :]) % np.array(self.factors)
        return np.ravel_multi_index(tuple(np.moveaxis(s, -1, 0)), self.factors)

    @cached_property
    def negation(self):
        c = (-self._coords) % np.array(self.factors)
        return np.ravel_multi_index(tuple(c.T), self.factors)

    @cached_property
    def character_table(self):
        """``table[xi, t]`` = character(xi, t) over flat indices."""
        c = self._coords.astype(float)
        phase = (c / np.array(self.factors, dtype=float)) @ self._coords.T.astype(float)
        return np.exp(2j * np.pi * phase)

    def to_descriptor(self):
        return list(self.factors)

    @classmethod
    def from_descriptor(cls, descriptor):
        if isinstance(descriptor, int):
            descriptor = [descriptor]
        return cls(tuple(descriptor))


class Integers:
    """Marker carrier for finitely supported measures on Z."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Integers()"

    def __eq__(self, other):
        return isinstance(other, Integers)

    def __hash__(self):
        return hash("Integers")

    def to_descriptor(self):
        return "Z"


def group_add(g, h, G):
    """Coordinatewise sum of ``g`` and ``h`` modulo the factor orders of ``G``."""
    return G.add(g, h)


def character(xi, t, G):
    """Value of the character indexed by ``xi`` at ``t``."""
    return G.character(xi, t)

"""Independent reference computations used by the tests.

Nothing here calls into rittkit: each function recomputes a quantity from
its definition with plain loops or numpy's FFT.
"""

import cmath
import itertools
import math

import numpy as np


def elements(factors):
    return list(itertools.product(*[range(n) for n in factors]))


def character(xi, t, factors):
    return cmath.exp(2j * math.pi * sum(k * x / n for k, x, n in zip(t, xi, factors)))


def convolve_atoms(mu, nu, add):
    out = {}
    for s, a in mu.items():
        for t, b in nu.items():
            key = add(s, t)
            out[key] = out.get(key, 0) + a * b
    return {k: v for k, v in out.items() if v != 0}


def symbol_fft(weights, factors):
    """Positive-sign symbol of a measure given as a row-major weight vector."""
    w = np.asarray(weights, dtype=complex).reshape(factors)
    return (np.fft.ifftn(w) * w.size).ravel()


def circulant(weights, factors):
    """``C[s, t] = w(s - t)`` by explicit loops."""
    els = elements(factors)
    index = {e: i for i, e in enumerate(els)}
    C = np.zeros((len(els), len(els)), dtype=complex)
    for s in els:
        for t in els:
            d = tuple((a - b) % n for a, b, n in zip(s, t, factors))
            C[index[s], index[t]] = weights[index[d]]
    return C


def hull_distance(z, r, iters=100):
    """``min_t |z - t| - r (1 - t)`` over t in [0, 1] by ternary search (convex in t).

    The hull of 1 and the closed disc of radius r is the union of the discs
    ``D(t, r (1 - t))``, so this is <= 0 exactly on the hull and equals the
    Euclidean distance to it outside.
    """
    z = np.asarray(z, dtype=complex)
    lo, hi = np.zeros(z.shape), np.ones(z.shape)

    def f(t):
        return np.abs(z - t) - r * (1 - t)

    for _ in range(iters):
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        left = f(a) < f(b)
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
    return f(0.5 * (lo + hi))


def ritt_sup_bruteforce(lam, nmax):
    n = np.arange(1, nmax + 1)
    return float(np.max(n * np.abs(lam) ** (n - 1) * abs(lam - 1)))

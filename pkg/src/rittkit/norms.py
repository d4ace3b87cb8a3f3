"""Norm tags and induced operator norms on l^p and mixed L^p(l^q) spaces.

Vectors on a mixed space are laid out block-major: index ``g * m + i``
with outer index ``g`` (weighted by ``weights[g]``) and inner index ``i``.
Exact norms are available for p = q in {1, 2, inf}; everything else is a
lower bound from a nonlinear power method (alternating maximisation of
``<z, A x>`` over the unit balls).
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_dimension, check_exponent, check_positive_int
from .exceptions import ConfigurationError, StructuralError
from .stolz import EXACT, MESH, Certified

DEFAULT_RESTARTS = 32


@dataclass(frozen=True)
class NormTag:
    """Finite-dimensional L^p(weights; l^q_m) space with ``dim`` outer points."""

    p: float
    dim: int
    q: float = None
    m: int = 1
    weights: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p))
        object.__setattr__(self, "dim", check_positive_int(self.dim, "dim"))
        object.__setattr__(self, "m", check_positive_int(self.m, "m"))
        q = self.p if self.q is None else check_exponent(self.q, "q")
        object.__setattr__(self, "q", q)
        if self.weights is not None:
            w = tuple(float(x) for x in np.asarray(self.weights, dtype=float).ravel())
            if len(w) != self.dim:
                raise StructuralError(f"{len(w)} weights for {self.dim} outer points")
            if min(w) <= 0:
                raise ConfigurationError("outer weights must be positive")
            object.__setattr__(self, "weights", w)
        check_dimension(self.total_dim)

    @classmethod
    def lp(cls, p, dim, weights=None):
        return cls(p, dim, None, 1, weights)

    @classmethod
    def mixed(cls, p, n, q, m, weights=None):
        return cls(p, n, q, m, weights)

    @property
    def kind(self):
        return "lp" if self.m == 1 else "mixed"

    @property
    def total_dim(self):
        return self.dim * self.m

    @property
    def inner_q(self):
        # with a one-point inner factor the inner exponent is irrelevant
        return self.p if self.m == 1 else self.q

    @property
    def is_hilbert(self):
        return self.p == 2 and self.inner_q == 2

    @property
    def uniform_weights(self):
        return self.weights is None or np.ptp(self.weights) <= 1e-15 * max(self.weights)

    def with_inner(self, q, m):
        """Tag of ``L^p(this outer space; l^q_m)``; requires a scalar inner factor."""
        if self.m != 1:
            raise StructuralError("inner factor already present")
        return NormTag(self.p, self.dim, q, m, self.weights)

    def scaling(self):
        """Diagonal of the isometry onto the unweighted space."""
        if self.weights is None or math.isinf(self.p):
            return np.ones(self.total_dim)
        return np.repeat(np.asarray(self.weights) ** (1.0 / self.p), self.m)

    def to_dict(self):
        def e(x):
            return "inf" if math.isinf(x) else x

        out = {"kind": self.kind, "p": e(self.p), "dim": self.dim}
        if self.m != 1:
            out.update(q=e(self.q), m=self.m)
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_dict(cls, data):
        def e(x):
            return math.inf if x in ("inf", "Infinity") else float(x)

        q = data.get("q")
        return cls(e(data["p"]), int(data["dim"]), None if q is None else e(q),
                   int(data.get("m", 1)), data.get("weights"))


def _lp(x, p, axis):
    a = np.abs(x)
    if math.isinf(p):
        return a.max(axis=axis)
    if p == 1:
        return a.sum(axis=axis)
    if p == 2:
        return np.sqrt((a * a).sum(axis=axis))
    return (a**p).sum(axis=axis) ** (1.0 / p)


def mixed_norm(x, p, q, m):
    """Norm of ``x`` (or of each column of a 2-d ``x``) in unweighted l^p(l^q_m)."""
    x = np.asarray(x)
    blocks = x.reshape((-1, m) + x.shape[1:])
    return _lp(_lp(blocks, q, 1), p, 0)


def vector_norm(x, tag):
    x = np.asarray(x) * (tag.scaling() if x.ndim == 1 else tag.scaling()[:, None])
    return mixed_norm(x, tag.p, tag.inner_q, tag.m)


def conjugate(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def _sgn(x):
    a = np.abs(x)
    return np.where(a > 0, x / np.where(a > 0, a, 1), 0)


def _peak(a, axis):
    # indicator of the (first) argmax along ``axis``
    idx = np.expand_dims(np.argmax(a, axis=axis), axis)
    out = np.zeros_like(a)
    np.put_along_axis(out, idx, 1.0, axis=axis)
    return out


def duality_map(v, p, q, m):
    """Columns ``u`` of the dual unit sphere with ``sum(u * v) = ||v||_{p,q}``.

    ``v`` has shape (n*m, R); the pairing is bilinear so that transposes
    (not adjoints) carry it through ``A``.
    """
    blocks = v.reshape(-1, m, v.shape[-1])
    a = np.abs(blocks)
    b = _lp(blocks, q, 1)  # (n, R)
    with np.errstate(divide="ignore", invalid="ignore"):
        if math.isinf(q):
            inner = _peak(a, 1)
        elif q == 1:
            inner = (a > 0).astype(float)
        else:
            inner = np.nan_to_num((a / b[:, None, :]) ** (q - 1))
        B = _lp(b, p, 0)
        if math.isinf(p):
            outer = _peak(b, 0)
        elif p == 1:
            outer = (b > 0).astype(float)
        else:
            outer = np.nan_to_num((b / B) ** (p - 1))
    u = outer[:, None, :] * inner * np.conj(_sgn(blocks))
    return u.reshape(v.shape)


def power_method_norm(A, p, q, m, restarts=DEFAULT_RESTARTS, seed=0, starts=None, maxiter=200, tol=1e-13):
    """Lower bound for the l^p(l^q_m) -> l^p(l^q_m) norm of ``A``.

    ``A`` is a square matrix or an ``ImplicitOperator``.
    Runs the nonlinear power method from ``restarts`` random complex starts
    plus deterministic ones (top right singular vector, constant vector,
    and any user ``starts``).  Returns (value, maximising vector).
    """
    if callable(A):
        apply, apply_t, d = A, A.transpose, A.dim
    else:
        A = np.asarray(A, dtype=complex)
        apply, apply_t, d = A.__matmul__, A.T.__matmul__, A.shape[1]
    rng = np.random.default_rng(seed)
    cols = [rng.standard_normal((d, restarts)) + 1j * rng.standard_normal((d, restarts))]
    if callable(A):
        cols.append(np.ones((d, 1)))
    else:
        _, _, vh = np.linalg.svd(A)
        cols.append(np.stack([np.conj(vh[0]), np.abs(vh[0]), np.ones(d)], axis=1))
    if starts is not None:
        cols.append(np.asarray(starts, dtype=complex).reshape(d, -1))
    X = np.concatenate(cols, axis=1)
    X = X / np.maximum(mixed_norm(X, p, q, m), 1e-300)
    pd, qd = conjugate(p), conjugate(q)
    est = mixed_norm(apply(X), p, q, m)
    for _ in range(maxiter):
        Z = duality_map(apply(X), p, q, m)
        W = apply_t(Z)
        Xn = duality_map(W, pd, qd, m)
        Xn = Xn / np.maximum(mixed_norm(Xn, p, q, m), 1e-300)
        new = mixed_norm(apply(Xn), p, q, m)
        better = new > est
        X = np.where(better[None, :], Xn, X)
        gain = np.max(new - est) if new.size else 0.0
        est = np.maximum(est, new)
        if gain <= tol * max(1.0, float(np.max(est))):
            break
    j = int(np.argmax(est))
    return float(est[j]), X[:, j]


class ImplicitOperator:
    """Matrix-free operator: ``apply`` and ``transpose`` act on (dim, R) arrays."""

    def __init__(self, apply, transpose, dim):
        self._apply, self.transpose, self.dim = apply, transpose, dim

    def __call__(self, X):
        return self._apply(X)


def matrix_norm(A, tag, restarts=DEFAULT_RESTARTS, seed=0, starts=None):
    """Induced norm of ``A`` on ``tag``; returns ``Certified``."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (tag.total_dim, tag.total_dim):
        raise StructuralError(f"matrix of shape {A.shape} does not act on a {tag.total_dim}-dim space")
    s = tag.scaling()
    A = (s[:, None] * A) / s[None, :]
    p, q, m = tag.p, tag.inner_q, tag.m
    if A.size == 0 or not np.any(A):
        return Certified(0.0, EXACT)
    if p == q and p == 2:
        return Certified(float(np.linalg.norm(A, 2)), EXACT, {"method": "largest singular value"})
    if p == q and p == 1:
        return Certified(float(np.abs(A).sum(axis=0).max()), EXACT, {"method": "max column sum"})
    if p == q and math.isinf(p):
        return Certified(float(np.abs(A).sum(axis=1).max()), EXACT, {"method": "max row sum"})
    value, _ = power_method_norm(A, p, q, m, restarts, seed, starts)
    return Certified(value, MESH, {"method": "alternating maximisation", "restarts": restarts, "seed": seed})

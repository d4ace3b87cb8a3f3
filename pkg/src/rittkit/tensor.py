"""Vector-valued tensor extensions, Rota dilation and Pisier's projection expression.

Tensor legs use row-major flat indices: on ``G^n`` the point
``(s_1, ..., s_n)`` sits at ``ravel_multi_index((s_1, ..., s_n))`` and
``kron(A_1, ..., A_n)`` applies ``A_i`` to coordinate ``s_i``.  An inner
factor ``l^q_m`` is always the last (fastest) leg.
"""

from dataclasses import dataclass
from functools import reduce
import math

import numpy as np

from ._validation import check_dense, check_dimension, check_positive_int
from .exceptions import GuardError, PreconditionError, StructuralError
from .measures import is_symmetric, square
from .norms import ImplicitOperator, NormTag, matrix_norm, power_method_norm
from .operators import LinearOperator, convolution_matrix, convolution_operator
from .stolz import EXACT, MESH, Certified

DILATION_TOL = 1e-12
IDEMPOTENT_TOL = 1e-10


def _kron_all(mats):
    return reduce(np.kron, mats)


def tensor_extend(T, inner):
    """``T (x) I_m`` acting on ``L^p(...; l^q_m)`` for ``inner = (q, m)``."""
    q, m = inner
    space = T.space.with_inner(q, m)
    check_dense(space.total_dim, "tensor extension")
    eig = None if T.eigenvalues is None else np.repeat(T.eigenvalues, m)
    return LinearOperator(np.kron(T.matrix, np.eye(m)), space, eig, T.normal)


def _family_matrices(measures, G):
    """Convolution matrices ``S[i][j]`` for a family ``measures[i][j]`` (i = leg, j = term)."""
    n = len(measures)
    if n < 1 or len({len(row) for row in measures}) != 1:
        raise StructuralError("measures must be a non-empty n x m nested list")
    return [[convolution_matrix(nu, G) for nu in row] for row in measures]


def _sum_index(G, n):
    """Flat index of ``s_1 + ... + s_n`` for every point of ``G^n`` (row-major)."""
    grids = np.indices((G.order,) * n).reshape(n, -1)
    acc = grids[0]
    for k in range(1, n):
        acc = G.addition_table[acc, grids[k]]
    return acc


def interchange_identity_check(measures, f, G, tol=1e-10):
    """Pointwise check of the interchange identity for each term j.

    ``[(S_nj ... S_1j) (x) I](f)(s_1 + ... + s_n)`` must equal
    ``[(S_1j (x) ... (x) S_nj (x) I)(F)](s_1, ..., s_n)`` with
    ``F(s_1, ..., s_n) = f(s_1 + ... + s_n)``.  ``f`` has shape (|G|, m).
    """
    f = np.asarray(f, dtype=complex)
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != G.order:
        raise StructuralError(f"test function has {f.shape[0]} rows, |G| = {G.order}")
    S = _family_matrices(measures, G)
    n, m = len(S), f.shape[1]
    check_dense(G.order**n * m, "interchange identity")
    sums = _sum_index(G, n)
    F = f[sums]
    worst = 0.0
    for j in range(len(S[0])):
        composed = reduce(lambda acc, A: A @ acc, [S[i][j] for i in range(n)], np.eye(G.order))
        lhs = (composed @ f)[sums]
        rhs = (_kron_all([S[i][j] for i in range(n)] + [np.eye(m)]) @ F.ravel()).reshape(-1, m)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return {"holds": worst <= tol, "max_error": worst, "n": n, "terms": len(S[0]), "m": m}


def _tag(p, dim, inner, weights=None):
    q, m = inner
    return NormTag(p, dim, q, m, weights)


def _exact(cert):
    return cert == EXACT


def lemma_lem_check(measures, G, p=2.0, inner=(2.0, 1), restarts=32, seed=0):
    """Compare ``||sum_j S_nj...S_1j (x) I_X||`` with ``||sum_j S_1j (x)...(x) S_nj (x) I_X||``."""
    S = _family_matrices(measures, G)
    n, J = len(S), len(S[0])
    q, m = inner
    check_dense(G.order**n * m, "tensor side of the interchange lemma")
    left = sum(reduce(lambda acc, A: A @ acc, [S[i][j] for i in range(n)], np.eye(G.order)) for j in range(J))
    right = sum(_kron_all([S[i][j] for i in range(n)]) for j in range(J))
    lhs = matrix_norm(np.kron(left, np.eye(m)), _tag(p, G.order, inner), restarts, seed)
    rhs = matrix_norm(np.kron(right, np.eye(m)), _tag(p, G.order**n, inner), restarts, seed)
    ok = lhs.value <= rhs.value + 1e-9
    exact = _exact(lhs.certificate) and _exact(rhs.certificate)
    return {
        "lhs": lhs.value,
        "rhs": rhs.value,
        "holds": bool(ok),
        "review": not exact,
        "exact": exact,
        "lhs_certificate": lhs.certificate,
        "rhs_certificate": rhs.certificate,
    }


# Rota dilation ----------------------------------------------------------------------


@dataclass
class DilationTriple:
    """Path-space factorisation ``P^2 = Q E J`` with ``Q J = I``.

    Path space is ``S x S`` with index ``x * |S| + y`` and measure
    ``m(x, y) = pi_x P(x, y)``.  ``J f(x, y) = f(x)``, ``E`` is the
    conditional expectation onto the second coordinate under ``m``, and
    ``Q g(x) = sum_y P(x, y) g(x, y)``.
    """

    J: np.ndarray
    E: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    base_measure: np.ndarray
    path_measure: np.ndarray

    @property
    def support(self):
        return self.path_measure > 0

    def restricted_expectation(self):
        """``E`` and the path measure restricted to the support of ``m``."""
        s = self.support
        return self.E[np.ix_(s, s)], self.path_measure[s]

    def residuals(self, exponents=(1.0, 2.0, 3.0), seed=0):
        n = self.P.shape[0]
        I = np.eye(n)
        ones = np.ones(n * n)
        rng = np.random.default_rng(seed)
        iso = 0.0
        for p in exponents:
            f = rng.standard_normal(n)
            base = np.sum(self.base_measure * np.abs(f) ** p) ** (1 / p)
            path = np.sum(self.path_measure * np.abs(self.J @ f) ** p) ** (1 / p)
            iso = max(iso, abs(path - base))
        weight_id = np.max(np.abs(self.path_measure.reshape(n, n).sum(axis=1) - self.base_measure))
        return {
            "QJ_minus_I": float(np.max(np.abs(self.Q @ self.J - I))),
            "QEJ_minus_P2": float(np.max(np.abs(self.Q @ self.E @ self.J - self.P @ self.P))),
            "E2_minus_E": float(np.max(np.abs(self.E @ self.E - self.E))),
            "E_ones_minus_ones": float(np.max(np.abs(self.E @ ones - ones))),
            "E_min_entry": float(self.E.min()),
            "J_isometry": float(max(iso, weight_id)),
        }


def rota_dilation(P, pi=None):
    """Rota dilation of a reversible Markov matrix; the dilated operator is ``P @ P``."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n):
        raise StructuralError("P must be square")
    if np.any(P < -DILATION_TOL):
        i, j = np.argwhere(P < -DILATION_TOL)[0]
        raise PreconditionError(f"negative transition probability at ({i}, {j})", witness=(int(i), int(j)))
    rows = np.abs(P.sum(axis=1) - 1)
    if np.any(rows > DILATION_TOL):
        raise PreconditionError(f"row {int(np.argmax(rows))} does not sum to 1", witness=int(np.argmax(rows)))
    pi = np.full(n, 1.0 / n) if pi is None else np.asarray(pi, dtype=float)
    if np.any(pi <= 0) or abs(pi.sum() - 1) > DILATION_TOL:
        raise PreconditionError("stationary distribution must be positive and sum to 1")
    flux = pi[:, None] * P
    imbalance = np.abs(flux - flux.T)
    if np.any(imbalance > DILATION_TOL):
        x, y = np.unravel_index(int(np.argmax(imbalance)), imbalance.shape)
        raise PreconditionError(
            f"detailed balance fails for states ({x}, {y}): {flux[x, y]:.3g} vs {flux[y, x]:.3g}",
            witness=(int(x), int(y)),
        )
    m = flux.ravel()
    J = np.kron(np.eye(n), np.ones((n, 1)))
    col = flux.sum(axis=0)  # marginal of the second coordinate
    E = np.zeros((n * n, n * n))
    for y in range(n):
        block = flux[:, y] / col[y]
        rows_y = np.arange(n) * n + y
        E[np.ix_(rows_y, rows_y)] = np.tile(block, (n, 1))
    Q = np.zeros((n, n * n))
    for x in range(n):
        Q[x, x * n : (x + 1) * n] = P[x]
    return DilationTriple(J, E, Q, P, pi, m)


def random_reversible_chain(n, rng):
    """Random reversible chain from a symmetric conductance matrix."""
    C = rng.uniform(size=(n, n))
    C = C + C.T
    C[rng.uniform(size=(n, n)) < 0.2] = 0.0
    C = np.triu(C) + np.triu(C, 1).T
    C += np.diag(rng.uniform(0.1, 1.0, size=n))
    deg = C.sum(axis=1)
    return C / deg[:, None], deg / deg.sum()


def random_conditional_expectation(k, rng):
    """Conditional expectation onto a random partition of ``k`` points, with random weights."""
    w = rng.uniform(0.1, 1.0, size=k)
    w /= w.sum()
    labels = rng.integers(0, rng.integers(1, k + 1), size=k)
    E = np.zeros((k, k))
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        E[np.ix_(idx, idx)] = np.tile(w[idx] / w[idx].sum(), (len(idx), 1))
    return E, w


# Pisier's expression ---------------------------------------------------------------


def pisier_operator(E, n, m=1):
    """Matrix of ``sum_k (I - P_k) prod_{j != k} P_j`` with ``P_j`` = E on leg j, tensor I_m."""
    E = np.asarray(E)
    k = E.shape[0]
    check_dense(k**n * m, "Pisier expression")
    I = np.eye(k)
    total = np.zeros((k**n, k**n), dtype=E.dtype)
    for leg in range(n):
        total = total + _kron_all([(I - E) if j == leg else E for j in range(n)])
    return np.kron(total, np.eye(m)) if m > 1 else total


def pisier_expression_norm(E, n, p=2.0, inner=(2.0, 1), weights=None, restarts=32, seed=0):
    """Norm of Pisier's projection expression on ``L^p(Omega^n; l^q_m)``.

    ``weights`` is the measure on Omega (uniform if omitted); the product
    measure is used on ``Omega^n``.  Exact at p = q = 2.
    """
    E = np.asarray(E)
    n = check_positive_int(n, "n")
    if np.max(np.abs(E @ E - E)) > IDEMPOTENT_TOL:
        raise PreconditionError("E is not idempotent")
    if np.min(E.real) < -IDEMPOTENT_TOL:
        raise PreconditionError("E is not positive")
    q, m = inner
    k = E.shape[0]
    w = None if weights is None else _kron_all([np.asarray(weights, dtype=float)] * n)
    tag = NormTag(p, k**n, q, m, w)
    return matrix_norm(pisier_operator(E, n, m), tag, restarts, seed)


def middle_operator(T, n):
    """``sum_j T^{(x)(n-j)} (x) (I - T) (x) T^{(x)(j-1)}`` on ``G^n``."""
    I = np.eye(T.shape[0])
    return sum(_kron_all([(I - T) if leg == n - j else T for leg in range(n)]) for j in range(1, n + 1))


def subordination_chain_check(eta, G, p=2.0, inner=(2.0, 1), nmax=2, restarts=32, seed=0):
    """Tabulate ``n ||(T^n - T^(n-1)) (x) I_X|| <= ||middle|| <= ||Pisier expression||``.

    ``T`` is convolution by ``eta * eta``; the Pisier side is built from
    the Rota dilation of convolution by ``eta`` (uniform stationary law).
    """
    if not is_symmetric(eta):
        raise PreconditionError("eta must be symmetric")
    nu = square(eta)
    q, m = inner
    base = NormTag.lp(p, G.order)
    T = convolution_operator(nu, G, base).matrix
    P = convolution_matrix(eta, G).real
    triple = rota_dilation(P)
    E_s, w_s = triple.restricted_expectation()
    rows = []
    Tn = np.eye(G.order, dtype=complex)
    for n in range(1, nmax + 1):
        prev, Tn = Tn, Tn @ T
        lhs = matrix_norm(np.kron(n * (Tn - prev), np.eye(m)), base.with_inner(q, m), restarts, seed)
        mid = matrix_norm(np.kron(middle_operator(T, n), np.eye(m)), _tag(p, G.order**n, inner), restarts, seed)
        rhs = pisier_expression_norm(E_s, n, p, inner, w_s, restarts, seed)
        exact = all(_exact(c.certificate) for c in (lhs, mid, rhs))
        ok = lhs.value <= mid.value + 1e-9 and mid.value <= rhs.value + 1e-9
        rows.append(
            {
                "n": n,
                "lhs": lhs.value,
                "middle": mid.value,
                "rhs": rhs.value,
                "slack": rhs.value - lhs.value,
                "holds": bool(ok),
                # two lower bounds cannot certify the inequality either way
                "review": not exact,
                "exact": exact,
            }
        )
    return rows


# regular norm and K-convexity probes ---------------------------------------------------


def regular_norm_lower(T, nmax=8, restarts=16, seed=0):
    """Lower bounds for ``||T (x) I_{l^inf_n}||`` on ``l^p(l^inf_n)``, n = 1..nmax (nondecreasing)."""
    if T.space.m != 1:
        raise StructuralError("regular norm probe needs an operator on a scalar l^p space")
    nmax = check_positive_int(nmax, "nmax")
    p, d = T.space.p, T.dim
    s = T.space.scaling()
    A = (s[:, None] * T.matrix) / s[None, :]
    out, best, prev = [], 0.0, None
    for n in range(1, nmax + 1):
        check_dimension(d * n, "regular norm probe")
        if n == 1:
            c = matrix_norm(A, NormTag.lp(p, d), restarts, seed)
            value, cert = c.value, c.certificate
            _, prev = power_method_norm(A, p, p, 1, restarts, seed)
        elif math.isinf(p):
            # on l^inf(l^inf) the norm of A (x) I is the max absolute row sum of A
            value, cert = float(np.abs(A).sum(axis=1).max()), EXACT
        else:
            # warm start: repeat the last column of the previous maximiser
            blocks = prev.reshape(d, n - 1)
            warm = np.concatenate([blocks, blocks[:, -1:]], axis=1).ravel()
            starts = np.stack([warm, np.ones(d * n)], axis=1)
            value, prev = power_method_norm(np.kron(A, np.eye(n)), p, math.inf, n, restarts, seed, starts)
            cert = MESH
        best = max(best, value)
        out.append(Certified(best, cert, {"n": n, "seed": seed}))
    return out


def rademacher_matrix(N):
    """Signs ``eps[s, i]`` on the cube {-1, 1}^N (row s, coordinate i)."""
    s = np.arange(2**N)[:, None]
    return 1.0 - 2.0 * ((s >> np.arange(N)[None, :]) & 1)


def kconvexity_lower(inner, N, restarts=16, seed=0):
    """Lower bound for ``||Rad (x) I_X||`` on ``L^2({-1,1}^N; l^q_m)``.

    ``Rad f = sum_i E[f eps_i] eps_i`` is the Rademacher projection.  For a
    Hilbert inner factor the value is the exact norm of an orthogonal
    projection.
    """
    q, m = inner
    if N > 12:
        raise GuardError(f"N = {N} exceeds the cube size cap 12")
    eps = rademacher_matrix(N)
    size = 2**N
    check_dimension(size * m, "K-convexity probe")
    if q == 2 or m == 1:
        gram = eps.T @ eps / size
        return Certified(float(np.linalg.eigvalsh(gram).max()), EXACT, {"N": N, "m": m, "q": q})

    def apply(X):
        R = X.shape[-1]
        B = X.reshape(size, m * R)
        return (eps @ (eps.T @ B) / size).reshape(size * m, R)

    op = ImplicitOperator(apply, apply, size * m)
    # natural extremal candidates: f(s) = (eps_1(s), ..., eps_m(s)) and one-coordinate signs
    starts = [np.eye(m)[np.arange(size) % m].ravel(), np.kron(eps[:, 0], np.eye(m)[0])]
    if m <= N:
        starts.append(eps[:, :m].ravel())
    value, _ = power_method_norm(op, 2.0, q, m, restarts, seed, np.stack(starts, axis=1))
    return Certified(max(value, 1.0), MESH, {"N": N, "m": m, "q": q, "seed": seed})


def kconvexity_sweep(q, ms, N, restarts=16, seed=0):
    """K-convexity lower bounds over inner dimensions ``ms`` (made nondecreasing by padding)."""
    out, best = [], 0.0
    for m in ms:
        c = kconvexity_lower((q, m), N, restarts, seed)
        best = max(best, c.value)
        out.append({"m": m, "value": best, "certificate": c.certificate, "seed": seed})
    return out

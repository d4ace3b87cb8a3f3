"""Bounded representations of finite groups and of Z; average operators; transference."""

import numpy as np

from ._validation import check_positive_int, check_square
from .exceptions import PreconditionError, StructuralError
from .groups import FiniteAbelianGroup, Integers
from .measures import Measure, ProbabilityMeasure, fourier_symbol
from .norms import NormTag, matrix_norm
from .operators import LinearOperator, convolution_operator, powers, spectrum
from .stolz import EXACT, GRID, MESH

REP_TOL = 1e-9


class Representation:
    """Group homomorphism ``k -> pi(k)`` into invertible matrices on ``space``.

    For a finite group pass one generator per cyclic factor; each must
    satisfy ``U^N = I`` and the generators must commute.  For the integers
    pass ``V`` and the unimodular diagonal ``D``; the generator is
    ``V diag(D) V^{-1}`` and ``norm_bound`` records ``||V|| ||V^{-1}||``.
    """

    def __init__(self, group, generators=None, space=None, V=None, D=None):
        self.group = group
        if isinstance(group, Integers):
            if V is None or D is None:
                raise PreconditionError("a representation of Z needs an explicit diagonalisation V, D")
            self.V = check_square(V, "V")
            self.D = np.asarray(D, dtype=complex).ravel()
            if self.D.size != self.V.shape[0]:
                raise StructuralError("D must have one entry per column of V")
            if np.any(np.abs(np.abs(self.D) - 1) > REP_TOL):
                raise PreconditionError("D must be unimodular", witness=complex(self.D[np.argmax(np.abs(np.abs(self.D) - 1))]))
            self.V_inv = np.linalg.inv(self.V)
            self.generators = [self.V @ np.diag(self.D) @ self.V_inv]
        elif isinstance(group, FiniteAbelianGroup):
            if generators is None:
                raise StructuralError("finite-group representations need generators")
            if isinstance(generators, np.ndarray) and generators.ndim == 2:
                generators = [generators]
            self.generators = [check_square(U, "generator") for U in generators]
            if len(self.generators) != group.rank:
                raise StructuralError(f"{len(self.generators)} generators for {group.rank} cyclic factors")
        else:
            raise StructuralError(f"unsupported group {group!r}")
        d = self.generators[0].shape[0]
        if any(U.shape != (d, d) for U in self.generators):
            raise StructuralError("generators must share one dimension")
        self.space = NormTag.lp(2, d) if space is None else space
        if self.space.total_dim != d:
            raise StructuralError("space dimension does not match the generators")
        if isinstance(group, FiniteAbelianGroup):
            self._check_law()
            self.norm_bound = max(self.norm(self(k)) for k in group.elements())
        else:
            self.norm_bound = self.norm(self.V) * self.norm(self.V_inv)

    @property
    def dim(self):
        return self.generators[0].shape[0]

    def norm(self, A):
        return matrix_norm(A, self.space).value

    def _check_law(self):
        I = np.eye(self.dim)
        for U, N in zip(self.generators, self.group.factors):
            err = np.max(np.abs(np.linalg.matrix_power(U, N) - I))
            if err > REP_TOL:
                raise PreconditionError(f"generator does not satisfy U^{N} = I (error {err:.3g})")
        for i, U in enumerate(self.generators):
            for W in self.generators[i + 1 :]:
                if np.max(np.abs(U @ W - W @ U)) > REP_TOL:
                    raise PreconditionError("generators do not commute")

    def __call__(self, k):
        if isinstance(self.group, Integers):
            k = int(k)
            return (self.V * self.D**k) @ self.V_inv
        k = self.group.reduce(k)
        out = np.eye(self.dim, dtype=complex)
        for U, e in zip(self.generators, k):
            out = out @ np.linalg.matrix_power(U, e)
        return out

    @classmethod
    def regular(cls, G, p=2):
        """Translation representation ``[lambda(t) f](s) = f(s - t)`` on l^p(G)."""
        gens = []
        for i in range(G.rank):
            e = [0] * G.rank
            e[i] = 1
            gens.append(convolution_operator(Measure.dirac(G, tuple(e)), G).matrix)
        return cls(G, gens, NormTag.lp(p, G.order))


def average_operator(pi, nu):
    """``S(pi, nu) = sum_t nu({t}) pi(t)``."""
    if nu.carrier != pi.group:
        raise StructuralError(f"measure on {nu.carrier!r} but representation of {pi.group!r}")
    S = sum((w * pi(t) for t, w in nu.atoms.items()), np.zeros((pi.dim, pi.dim), dtype=complex))
    return LinearOperator(S, pi.space)


def _lifted_tag(pi, p):
    """Tag of ``L^p(G; X)`` where X is the representation space."""
    X = pi.space
    return NormTag.mixed(p, pi.group.order, X.p, X.total_dim)


def transference_check(pi, nu, p=2.0, restarts=32, seed=0):
    """Compare ``||S(pi, nu)||`` with ``||pi||^2 ||C_{nu,p}^X||`` on a finite group.

    With V = G the transference argument is exact on a finite group, so the
    inequality must hold.  When the right side is only a lower bound,
    violations are flagged for review rather than failed.
    """
    if not isinstance(pi.group, FiniteAbelianGroup):
        raise StructuralError("finite transference needs a finite group")
    S = average_operator(pi, nu)
    lhs_c = matrix_norm(S.matrix, pi.space, restarts, seed)
    tag = _lifted_tag(pi, p)
    C = convolution_operator(nu, pi.group, tag)
    rhs_c = matrix_norm(C.matrix, tag, restarts, seed)
    rhs = pi.norm_bound**2 * rhs_c.value
    ok = lhs_c.value <= rhs + 1e-9
    conservative = rhs_c.certificate != EXACT
    return {
        "seed": seed,
        "group": pi.group.to_descriptor(),
        "p": p,
        "lhs": lhs_c.value,
        "rhs": rhs,
        "conv_norm": rhs_c.value,
        "pi_norm": pi.norm_bound,
        "holds": bool(ok or conservative),
        "review": bool(not ok and conservative),
        "slack": rhs - lhs_c.value,
        "lhs_certificate": lhs_c.certificate,
        "rhs_certificate": rhs_c.certificate,
    }


def random_unimodular_representation(N, dim, rng, cond_max=3.0):
    """``U = V D V^{-1}`` with ``D`` random N-th roots of unity and cond(V) <= cond_max."""
    Q1, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    Q2, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    V = Q1 @ np.diag(rng.uniform(1.0, cond_max, size=dim)) @ Q2
    D = np.exp(2j * np.pi * rng.integers(0, N, size=dim) / N)
    U = V @ np.diag(D) @ np.linalg.inv(V)
    return U, V, D


def random_probability(G, rng, support=None):
    n = G.order if support is None else support
    pts = rng.choice(G.order, size=min(n, G.order), replace=False)
    w = rng.uniform(size=len(pts))
    w /= w.sum()
    return ProbabilityMeasure(G, {G.element(int(i)): float(x) for i, x in zip(pts, w)})


def transference_trials(N=8, trials=100, max_dim=6, p=2.0, seed=0):
    """Randomised corpus of transference checks; one child seed per trial."""
    return [transference_trial(N, max_dim, p, s) for s in trial_seeds(seed, trials)]


def trial_seeds(seed, trials):
    """Independent child seeds of ``seed`` (stable under reordering of the trials)."""
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(trials)]


def transference_trial(N, max_dim, p, trial_seed):
    """One random representation of Z_N and one random probability measure, checked."""
    G = FiniteAbelianGroup.cyclic(N)
    rng = np.random.default_rng(trial_seed)
    U, _, _ = random_unimodular_representation(N, int(rng.integers(1, max_dim + 1)), rng)
    pi = Representation(G, [U], NormTag.lp(p, U.shape[0]))
    nu = random_probability(G, rng, int(rng.integers(1, N + 1)))
    return transference_check(pi, nu, p, seed=trial_seed)


def powers_profile(pi, nu, nmax=64, restarts=8, seed=0):
    """Rows ``{n, subordinated, convolution_bound}`` for n = 1..nmax.

    ``subordinated`` is ``n ||S^n - S^(n-1)||`` for ``S = S(pi, nu)``;
    ``convolution_bound`` is ``||pi||^2 n ||C^n - C^(n-1)||`` for the
    convolution operator on ``L^2(G; X)`` (on Z: sampled on the torus).
    """
    nmax = check_positive_int(nmax, "nmax")
    S = average_operator(pi, nu)
    P = powers(S.matrix, nmax)
    scale = pi.norm_bound**2
    if isinstance(pi.group, Integers):
        sym = fourier_symbol(nu)
        conv_vals, cert = sym.values, GRID
    else:
        tag = _lifted_tag(pi, 2.0)
        C = convolution_operator(nu, pi.group, tag)
        conv_vals = spectrum(C) if C.exact_l2 else None
        cert = EXACT if C.exact_l2 else MESH
        if conv_vals is None:
            Q = powers(C.matrix, nmax)
    rows = []
    for n in range(1, nmax + 1):
        sub = n * matrix_norm(P[n] - P[n - 1], pi.space, restarts, seed).value
        if conv_vals is not None:
            conv = n * float(np.max(np.abs(conv_vals ** (n - 1) * (conv_vals - 1))))
        else:
            conv = n * matrix_norm(Q[n] - Q[n - 1], tag, restarts, seed).value
        rows.append({"n": n, "subordinated": sub, "convolution_bound": scale * conv, "certificate": cert})
    return rows

"""Convolution operators, spectra, and Ritt / resolvent / sectorial constants."""

from dataclasses import dataclass, field, asdict
import math

import numpy as np

from ._validation import check_dense, check_positive_int, check_sector_angle, check_square
from .exceptions import NumericalError, PreconditionError, StructuralError
from .groups import FiniteAbelianGroup
from .measures import fourier_symbol
from .norms import DEFAULT_RESTARTS, NormTag, matrix_norm
from .stolz import MESH, Certified, _num, point_stolz_angles

SPECTRAL_TOL = 1e-9      # eigenvalue tolerance for |lambda| = 1 and disc checks
NORMALITY_TOL = 1e-10


@dataclass
class LinearOperator:
    """Dense complex square matrix acting on the space described by ``space``.

    ``eigenvalues`` is set for operators whose spectrum is known in closed
    form (convolution operators); ``normal`` marks operators known to be
    normal on l^2 with uniform weights.
    """

    matrix: np.ndarray
    space: NormTag = None
    eigenvalues: np.ndarray = field(default=None, repr=False)
    normal: bool = False

    def __post_init__(self):
        self.matrix = check_square(self.matrix)
        if self.space is None:
            self.space = NormTag.lp(2, self.matrix.shape[0])
        if self.space.total_dim != self.matrix.shape[0]:
            raise StructuralError(
                f"matrix dimension {self.matrix.shape[0]} does not match space dimension {self.space.total_dim}"
            )
        if not self.normal and self.space.is_hilbert:
            self.normal = _is_normal(self.matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def exact_l2(self):
        """True when the operator norm of any polynomial in it is a spectral sup."""
        return self.space.is_hilbert and self.space.uniform_weights and self.normal

    def with_matrix(self, matrix, eigenvalues=None, normal=None):
        return LinearOperator(matrix, self.space, eigenvalues, self.normal if normal is None else normal)

    def __matmul__(self, other):
        return self.with_matrix(self.matrix @ other.matrix, normal=False)


def _is_normal(A):
    c = A @ A.conj().T - A.conj().T @ A
    return bool(np.max(np.abs(c), initial=0.0) <= NORMALITY_TOL * max(1.0, np.max(np.abs(A)) ** 2))


def identity(space):
    return LinearOperator(np.eye(space.total_dim, dtype=complex), space, np.ones(space.total_dim, complex), True)


def convolution_matrix(nu, G):
    """Matrix ``C[s, t] = nu({s - t})`` in flat element order."""
    if nu.carrier != G:
        raise StructuralError(f"measure lives on {nu.carrier!r}, not on {G!r}")
    w = nu.weights()
    idx = G.addition_table[:, G.negation]
    return w[idx]


def convolution_operator(nu, G, tag=None):
    """Convolution by ``nu`` on ``L^p(G)`` or, for a mixed tag, ``L^p(G; l^q_m)``."""
    if not isinstance(G, FiniteAbelianGroup):
        raise StructuralError("convolution operators need a finite group")
    tag = NormTag.lp(2, G.order) if tag is None else tag
    if tag.dim != G.order:
        raise StructuralError(f"tag has {tag.dim} outer points but |G| = {G.order}")
    check_dense(tag.total_dim)
    C = convolution_matrix(nu, G)
    eig = fourier_symbol(nu).values
    if tag.m > 1:
        C = np.kron(C, np.eye(tag.m))
        eig = np.repeat(eig, tag.m)
    return LinearOperator(C, tag, eig, normal=True)


def spectrum(T):
    """Eigenvalues of ``T``; closed form for convolution operators."""
    if T.eigenvalues is not None:
        return np.asarray(T.eigenvalues, dtype=complex)
    try:
        return np.linalg.eigvals(T.matrix)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(T.matrix)
        raise NumericalError(f"eigensolver failed (condition number {cond:.3g})") from exc


def operator_norm(T, restarts=DEFAULT_RESTARTS, seed=0, starts=None):
    """Induced norm of ``T`` on its tagged space, with certificate type."""
    return matrix_norm(T.matrix, T.space, restarts, seed, starts)


def _norm_value(A, space, restarts, seed):
    return matrix_norm(A, space, restarts, seed).value


# Ritt constants -----------------------------------------------------------------


@dataclass
class RittReport:
    c0: float
    c1: float
    nmax: int
    resolvent_k: float
    gamma_star: float
    verdict: str
    tail_certified: bool
    witness: complex = None
    profile: list = field(default=None, repr=False)

    def to_record(self):
        """Flat record for JSON lines / CSV."""
        rec = asdict(self)
        rec.pop("profile")
        for key in ("c0", "c1", "resolvent_k", "gamma_star"):
            rec[key] = None if rec[key] is None else _num(rec[key])
        w = rec.pop("witness")
        rec["witness_re"] = None if w is None else float(np.real(w))
        rec["witness_im"] = None if w is None else float(np.imag(w))
        return rec


def _eig_ritt_sup(lam, nmax=None):
    """Per-eigenvalue ``sup_{1 <= n <= nmax} n |lam|^(n-1) |lam - 1|`` (nmax=None: all n)."""
    lam = np.asarray(lam, dtype=complex)
    r = np.abs(lam)
    d = np.abs(lam - 1)
    out = np.zeros(lam.shape)
    for k, (rk, dk) in enumerate(zip(r, d)):
        if dk == 0 or (rk >= 1 and dk <= SPECTRAL_TOL):
            # the point 1 itself, up to rounding in the computed spectrum
            continue
        if rk == 0:
            out[k] = dk
            continue
        if rk >= 1:
            out[k] = math.inf if nmax is None else nmax * rk ** (nmax - 1) * dk
            continue
        nstar = -1.0 / math.log(rk)
        cands = {1, max(1, math.floor(nstar)), max(1, math.ceil(nstar))}
        if nmax is not None:
            cands = {min(c, nmax) for c in cands} | {nmax}
        out[k] = max(n * rk ** (n - 1) * dk for n in cands)
    return out


def _unimodular_witness(eig, tol=SPECTRAL_TOL):
    bad = (np.abs(eig) >= 1 - tol) & (np.abs(eig - 1) > tol)
    idx = np.flatnonzero(bad)
    if not idx.size:
        return None
    # first offender in spectrum order (dual-index order for convolutions)
    return complex(eig[idx[0]])


def _gamma_star(eig):
    if np.any(np.abs(eig) > 1 + SPECTRAL_TOL):
        return math.inf
    mod = np.abs(eig)
    clipped = np.where(mod > 1, eig / np.where(mod > 1, mod, 1), eig)
    return float(np.max(point_stolz_angles(clipped)))


def powers(A, nmax):
    """[A^0, A^1, ..., A^nmax] by repeated multiplication."""
    out = [np.eye(A.shape[0], dtype=complex)]
    for _ in range(nmax):
        out.append(out[-1] @ A)
    return out


def ritt_profile(T, nmax, restarts=8, seed=0):
    """Rows ``(n, ||T^n||, n ||T^n - T^(n-1)||)`` for n = 0..nmax (second column only for n=0)."""
    if T.exact_l2:
        eig = spectrum(T)
        r, d = np.abs(eig), np.abs(eig - 1)
        rows = [(0, 1.0, 0.0)]
        for n in range(1, nmax + 1):
            rows.append((n, float(np.max(r**n)), float(n * np.max(r ** (n - 1) * d))))
        return rows
    P = powers(T.matrix, nmax)
    rows = [(0, _norm_value(P[0], T.space, restarts, seed), 0.0)]
    for n in range(1, nmax + 1):
        rows.append(
            (n, _norm_value(P[n], T.space, restarts, seed), n * _norm_value(P[n] - P[n - 1], T.space, restarts, seed))
        )
    return rows


def ritt_constants(T, nmax=256, resolvent=False, restarts=8, seed=0):
    """Power bound, Ritt constant and spectral data of ``T``.

    For normal operators on l^2 the Ritt constant is the exact sup over all
    n, from ``sup_n n |lam|^(n-1) |lam - 1|`` per eigenvalue.  Otherwise
    both constants are maxima over ``n <= nmax`` and ``tail_certified`` is
    False.  ``not-ritt`` is only reported with a spectral witness
    (``|lam| = 1``, ``lam != 1``) or spectral radius above 1.
    """
    nmax = check_positive_int(nmax, "nmax")
    eig = spectrum(T)
    gamma_star = _gamma_star(eig)
    witness = _unimodular_witness(eig)
    rho = float(np.max(np.abs(eig), initial=0.0))
    if rho > 1 + SPECTRAL_TOL:
        witness = complex(eig[np.argmax(np.abs(eig))])
    res_k = resolvent_constant(T).value if (resolvent and rho <= 1 + SPECTRAL_TOL) else None

    if T.exact_l2:
        if witness is None:
            c1 = float(np.max(_eig_ritt_sup(eig), initial=0.0))
            c0 = max(1.0, rho)
            return RittReport(c0, c1, nmax, res_k, gamma_star, "ritt-certified", True)
        c1 = float(np.max(_eig_ritt_sup(eig, nmax)))
        c0 = max(1.0, rho**nmax)
        return RittReport(c0, c1, nmax, res_k, gamma_star, "not-ritt", False, witness)

    profile = ritt_profile(T, nmax, restarts, seed)
    c0 = max(row[1] for row in profile)
    c1 = max(row[2] for row in profile[1:])
    verdict = "ritt-numerical"
    if witness is not None:
        half = max(row[2] for row in profile[1 : max(2, nmax // 2 + 1)])
        if nmax == 1 or c1 >= 1.5 * half or rho > 1 + SPECTRAL_TOL:
            verdict = "not-ritt"
    return RittReport(c0, c1, nmax, res_k, gamma_star, verdict, False, witness, profile)


# resolvent and sectorial constants ---------------------------------------------------


def _inverse_norms(T, zs, restarts, seed):
    """``||(z - T)^{-1}||`` for each sample ``z`` (inf where numerically singular)."""
    A = T.matrix
    d = T.dim
    if T.exact_l2:
        eig = spectrum(T)
        dist = np.min(np.abs(zs[:, None] - eig[None, :]), axis=1)
        with np.errstate(divide="ignore"):
            return 1.0 / dist
    M = zs[:, None, None] * np.eye(d) - A[None, :, :]
    if T.space.is_hilbert and T.space.uniform_weights:
        s = np.linalg.svd(M, compute_uv=False)
        smin, smax = s[:, -1], s[:, 0]
        with np.errstate(divide="ignore"):
            out = 1.0 / smin
        return np.where(smin <= 1e-14 * smax, np.inf, out)
    out = np.empty(len(zs))
    for k, Mk in enumerate(M):
        try:
            inv = np.linalg.inv(Mk)
        except np.linalg.LinAlgError:
            out[k] = np.inf
            continue
        out[k] = matrix_norm(inv, T.space, restarts, seed).value
    return out


def resolvent_constant(T, radii=64, angles=512, rmax=4.0, restarts=4, seed=0):
    """Lower bound for ``K = sup_{|z| > 1} |z - 1| ||(z - T)^{-1}||``.

    Samples ``|z| = 1 + t`` with ``t`` log-spaced in [1e-6, rmax - 1] and
    ``angles`` equispaced arguments.  The region ``|z| > rmax`` is not
    sampled (the quotient tends to 1 there).
    """
    eig = spectrum(T)
    rho = float(np.max(np.abs(eig), initial=0.0))
    if rho > 1 + SPECTRAL_TOL:
        raise PreconditionError(f"spectral radius {rho:.6g} > 1", witness=complex(eig[np.argmax(np.abs(eig))]))
    rs = 1 + np.logspace(-6, math.log10(rmax - 1), radii)
    th = 2 * math.pi * np.arange(angles) / angles
    zs = np.multiply.outer(rs, np.exp(1j * th)).ravel()
    inv = _inverse_norms(T, zs, restarts, seed)
    vals = np.abs(zs - 1) * inv
    skipped = int(np.sum(~np.isfinite(vals)))
    finite = np.where(np.isfinite(vals), vals, -np.inf)
    k = int(np.argmax(finite))
    return Certified(
        float(finite[k]),
        MESH,
        {
            "radii": radii,
            "angles": angles,
            "rmax": rmax,
            "argmax_re": float(zs[k].real),
            "argmax_im": float(zs[k].imag),
            "skipped": skipped,
            "note": f"|z| > {rmax} not sampled; quotient tends to 1 there",
        },
    )


def sector_angle(A):
    """Smallest omega with the spectrum of ``A`` in the closed sector (0 for [0, inf))."""
    eig = spectrum(A)
    nz = eig[np.abs(eig) > SPECTRAL_TOL]
    return float(np.max(np.abs(np.angle(nz)), initial=0.0))


def sectorial_constant(A, alpha, moduli=64, angles=256, restarts=4, seed=0):
    """Lower bound for ``K_alpha = sup_{|Arg lam| > alpha} |lam| ||(lam - A)^{-1}||``.

    ``|lam|`` is log-spaced in [1e-3, 1e3]; arguments cover [alpha, pi]
    and its mirror.
    """
    alpha = check_sector_angle(alpha)
    eig = spectrum(A)
    nz = np.abs(eig) > SPECTRAL_TOL
    outside = nz & (np.abs(np.angle(eig)) > alpha + SPECTRAL_TOL)
    if np.any(outside):
        w = complex(eig[np.flatnonzero(outside)[0]])
        raise PreconditionError(f"eigenvalue {w} lies outside the sector of angle {alpha:.6g}", witness=w)
    half = np.linspace(alpha, math.pi, angles // 2)
    th = np.concatenate([half, -half])
    rs = np.logspace(-3, 3, moduli)
    lams = np.multiply.outer(rs, np.exp(1j * th)).ravel()
    inv = _inverse_norms(A, lams, restarts, seed)
    vals = np.abs(lams) * inv
    skipped = int(np.sum(~np.isfinite(vals)))
    finite = np.where(np.isfinite(vals), vals, -np.inf)
    k = int(np.argmax(finite))
    return Certified(
        float(finite[k]),
        MESH,
        {
            "alpha": alpha,
            "spectral_angle": sector_angle(A),
            "argmax_re": float(lams[k].real),
            "argmax_im": float(lams[k].imag),
            "skipped": skipped,
        },
    )


@dataclass
class SquareCheck:
    c1_T: float
    c1_T2: float
    inv_norm: float
    inequality_holds: bool
    derived_c1_bound: float
    nmax: int
    worst_slack: float

    def to_dict(self):
        return {k: _num(v) if isinstance(v, float) else v for k, v in asdict(self).items()}


def ritt_from_square_check(T, nmax=100, restarts=4, seed=0):
    """Check ``n ||T^(2n-2)(T - I)|| <= ||(I+T)^{-1}|| n ||T^(2n) - T^(2n-2)||`` for n <= nmax.

    Also reports the bound ``c1(T) <= 2 max(1, ||T||) ||(I+T)^{-1}|| c1(T^2)``
    that follows from it.
    """
    nmax = check_positive_int(nmax, "nmax")
    I = np.eye(T.dim, dtype=complex)
    s = np.linalg.svd(I + T.matrix, compute_uv=False)
    if s[-1] <= 1e-12 * max(1.0, s[0]):
        raise PreconditionError("I + T is singular: -1 lies in the spectrum of T", witness=-1)
    space = T.space
    inv = np.linalg.inv(I + T.matrix)
    inv_norm = _norm_value(inv, space, restarts, seed)
    norm_T = _norm_value(T.matrix, space, restarts, seed)
    P = powers(T.matrix, 2 * nmax)
    holds, worst, c1_T2, c1_T = True, math.inf, 0.0, 0.0
    for n in range(1, nmax + 1):
        left = n * _norm_value(P[2 * n - 2] @ (T.matrix - I), space, restarts, seed)
        sq = n * _norm_value(P[2 * n] - P[2 * n - 2], space, restarts, seed)
        right = inv_norm * sq
        c1_T2 = max(c1_T2, sq)
        slack = right - left
        worst = min(worst, slack)
        if left > right * (1 + 1e-9) + 1e-12:
            holds = False
        c1_T = max(c1_T, n * _norm_value(P[n] - P[n - 1], space, restarts, seed))
    derived = 2 * max(1.0, norm_T) * inv_norm * c1_T2
    return SquareCheck(c1_T, c1_T2, inv_norm, holds, derived, nmax, worst)

"""Stolz domains, sectors, and the BAR constant of a symbol.

``B_gamma`` is the interior of the convex hull of 1 and the disc of radius
``sin(gamma)``.  Membership tests use the closure.  Its boundary consists of
two tangent segments from 1 (length ``cos(gamma)``, half-angle ``gamma``)
and the far arc of the circle ``|z| = sin(gamma)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_sector_angle, check_stolz_angle
from .exceptions import InvalidSymbolError

ONE_TOL = 1e-12          # |1 - z| below this counts as z == 1
UNIMODULAR_TOL = 1e-12   # |z| above 1 - this counts as |z| == 1
INVALID_TOL = 1e-9       # |z| above 1 + this is not a probability symbol
ANGLE_TOL = 1e-9

EXACT = "exact-finite"
GRID = "grid-with-eps"
MESH = "mesh-lower-bound"


@dataclass
class Certified:
    """A computed sup together with how much it can be trusted."""

    value: float
    certificate: str
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        return {"value": _num(self.value), "certificate": self.certificate, **self.meta}


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


@dataclass(frozen=True)
class StolzDomain:
    gamma: float

    def __post_init__(self):
        check_stolz_angle(self.gamma)

    def __contains__(self, z):
        return bool(stolz_contains(self.gamma, z))


@dataclass(frozen=True)
class Sector:
    omega: float

    def __post_init__(self):
        check_sector_angle(self.omega)

    def __contains__(self, lam):
        return bool(sector_contains(self.omega, lam))


def _contains(gamma, z):
    z = np.asarray(z, dtype=complex)
    w = 1 - z
    disc = np.abs(z) <= math.sin(gamma)
    cone = (np.abs(np.angle(w)) <= gamma) & (np.abs(w) <= math.cos(gamma))
    return disc | cone | (w == 0)


def stolz_contains(gamma, z):
    """Membership of ``z`` (scalar or array) in the closure of B_gamma."""
    gamma = check_stolz_angle(gamma)
    out = _contains(gamma, z)
    return bool(out) if out.ndim == 0 else out


def sector_contains(omega, lam):
    """Membership of ``lam`` in the closed sector ``|Arg| <= omega`` (0 included)."""
    omega = check_sector_angle(omega)
    lam = np.asarray(lam, dtype=complex)
    out = (lam == 0) | (np.abs(np.angle(lam)) <= omega)
    return bool(out) if out.ndim == 0 else out


# boundary parameterisation ----------------------------------------------------


def boundary_point(gamma, u):
    """Point of the boundary of B_gamma at parameter ``u`` in [0, 3].

    ``u`` in [0,1] runs along the lower-right tangent segment from 1 to its
    tangent point, [1,2] along the arc, [2,3] back along the other segment.
    """
    u = np.asarray(u, dtype=float)
    c, s = math.cos(gamma), math.sin(gamma)
    theta_t = math.pi / 2 - gamma
    seg1 = 1 - np.clip(u, 0, 1) * c * np.exp(1j * gamma)
    theta = -theta_t - (np.clip(u, 1, 2) - 1) * (2 * math.pi - 2 * theta_t)
    arc = s * np.exp(1j * theta)
    seg2 = 1 - np.clip(3 - u, 0, 1) * c * np.exp(-1j * gamma)
    return np.where(u < 1, seg1, np.where(u <= 2, arc, seg2))


def boundary_parameters(n_arc=512, n_seg=256, cluster=64):
    """Mesh of parameters; segments are additionally clustered towards z = 1."""
    seg = np.linspace(0, 1, n_seg, endpoint=False)
    near = np.logspace(-12, -1, cluster)
    arc = 1 + np.linspace(0, 1, n_arc + 1)
    u = np.concatenate([seg, near, arc, [1.5], 3 - seg, 3 - near, [3.0]])
    return np.unique(u)


def stolz_boundary(gamma, n_points=512):
    """Closed boundary polyline of B_gamma (for plotting)."""
    gamma = check_stolz_angle(gamma)
    u = np.linspace(0, 3, n_points)
    return boundary_point(gamma, u)


def _mesh_sup(func, gamma, tol, n_arc=512, n_seg=256, peaks=16, max_zoom=40):
    """Max of ``func`` over the boundary mesh, refined locally around the peaks.

    ``func`` maps an array of complex points to real values.  The best
    ``peaks`` local maxima of the initial mesh are each zoomed in on.
    Returns (value, parameter of the maximiser, history of the best value).
    """
    u = boundary_parameters(n_arc, n_seg)
    vals = np.asarray(func(boundary_point(gamma, u)), dtype=float)
    left = np.concatenate([[-np.inf], vals[:-1]])
    right = np.concatenate([vals[1:], [-np.inf]])
    cand = np.flatnonzero((vals >= left) & (vals >= right))
    cand = cand[np.argsort(vals[cand])[::-1][:peaks]]
    centers = u[cand].astype(float)
    best_vals = vals[cand].astype(float)
    # half-width of the first zoom window: one mesh spacing on each side
    h = np.array([max(u[min(i + 1, len(u) - 1)] - u[max(i - 1, 0)], 1e-12) for i in cand])
    offsets = np.linspace(-1, 1, 33)
    history = [float(best_vals.max())]
    for _ in range(max_zoom):
        local = np.clip(centers[:, None] + h[:, None] * offsets[None, :], 0, 3)
        lv = np.asarray(func(boundary_point(gamma, local.ravel())), dtype=float).reshape(local.shape)
        j = np.argmax(lv, axis=1)
        top = lv[np.arange(len(cand)), j]
        better = top > best_vals
        centers = np.where(better, local[np.arange(len(cand)), j], centers)
        best_vals = np.maximum(best_vals, top)
        h = h / 4
        history.append(float(best_vals.max()))
        if history[-1] - history[-2] < tol and np.max(h) < 1e-9:
            break
    k = int(np.argmax(best_vals))
    return float(best_vals[k]), float(centers[k]), history


def stolz_ratio_constant(gamma, samples=512, tol=1e-6):
    """Lower bound for ``C_gamma = sup_{z in B_gamma} |1 - z| / (1 - |z|)``.

    The sup is taken over the boundary and a radial interior mesh, refined
    until two successive estimates differ by less than ``tol``.
    """
    gamma = check_stolz_angle(gamma)

    def ratio(z):
        z = np.asarray(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(1 - z) / (1 - np.abs(z))
        return np.where(np.abs(1 - z) > ONE_TOL, r, 0.0)

    estimates = []
    n = samples
    for _ in range(6):
        u = boundary_parameters(n, max(n // 2, 8))
        b = boundary_point(gamma, u)
        t = np.linspace(0, 1, max(n // 8, 8))[1:]
        pts = np.concatenate([b, np.multiply.outer(t, b).ravel()])
        estimates.append(float(np.max(ratio(pts))))
        if len(estimates) > 1 and abs(estimates[-1] - estimates[-2]) < tol:
            break
        n *= 4
    edge, _, _ = _mesh_sup(ratio, gamma, tol)
    value = max(max(estimates), edge)
    return Certified(value, MESH, {"gamma": gamma, "estimates": estimates})


def phi_n_sup(n, gamma, tol=1e-8):
    """Lower bound for ``sup_{B_gamma} |n (z^n - z^(n-1))|`` from the boundary mesh."""
    gamma = check_stolz_angle(gamma)
    n = int(n)

    def phi(z):
        z = np.asarray(z, dtype=complex)
        mod = np.abs(z)
        with np.errstate(divide="ignore"):
            logpow = (n - 1) * np.log(mod)
        return n * np.exp(logpow) * np.abs(z - 1)

    value, u_best, history = _mesh_sup(phi, gamma, tol)
    return Certified(value, MESH, {"n": n, "gamma": gamma, "argmax": complex(boundary_point(gamma, u_best))})


# BAR constant and minimal angle --------------------------------------------------


@dataclass
class BarReport:
    constant: float
    fails: bool
    witnesses: list
    certified: bool
    certificate: str
    epsilon: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def finite(self):
        return not self.fails and math.isfinite(self.constant)

    def to_dict(self):
        return {
            "constant": _num(self.constant),
            "fails": self.fails,
            "witnesses": self.witnesses,
            "certified": self.certified,
            "certificate": self.certificate,
            "epsilon": self.epsilon,
            **self.meta,
        }


@dataclass
class AngleReport:
    gamma: float
    fails: bool
    witness: object
    certificate: str
    epsilon: float = 0.0

    def to_dict(self):
        return {
            "gamma_star": _num(self.gamma),
            "fails": self.fails,
            "witness": self.witness,
            "certificate": self.certificate,
            "epsilon": self.epsilon,
        }


def _check_symbol_values(values):
    values = np.asarray(values, dtype=complex)
    bad = np.flatnonzero(np.abs(values) > 1 + INVALID_TOL)
    if bad.size:
        raise InvalidSymbolError(
            f"symbol value {values[bad[0]]} has modulus > 1", witness=int(bad[0])
        )
    return values


def _bar_ratios(values):
    """Per-point ratio |1-v| / (1-|v|); nan where excluded, inf where BAR fails."""
    one = np.abs(1 - values) <= ONE_TOL
    unimodular = (np.abs(values) >= 1 - UNIMODULAR_TOL) & ~one
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(1 - values) / (1 - np.abs(values))
    r = np.where(one, np.nan, r)
    return np.where(unimodular, np.inf, r)


def bar_constant(symbol):
    """Smallest K with ``|1 - v| <= K (1 - |v|)`` over the symbol values.

    Points where the symbol equals 1 are excluded; a constant symbol 1 gets
    K = 1.  A unimodular value other than 1 makes BAR fail.  Torus symbols
    are refined locally around the worst grid point.
    """
    values = _check_symbol_values(symbol.values)
    ratios = _bar_ratios(values)
    if np.all(np.isnan(ratios)):
        return BarReport(1.0, False, [], True, EXACT if symbol.kind == "finite-dual" else GRID,
                         symbol.epsilon, {"convention": "symbol identically 1"})
    failing = np.flatnonzero(np.isinf(ratios))
    if failing.size:
        return BarReport(math.inf, True, [symbol.witness(int(i)) for i in failing[:8]], True,
                         EXACT if symbol.kind == "finite-dual" else GRID, symbol.epsilon)
    worst = float(np.nanmax(ratios))
    idx = np.flatnonzero(ratios >= worst * (1 - 1e-12))
    witnesses = [symbol.witness(int(i)) for i in idx[:8]]
    if symbol.kind == "finite-dual":
        return BarReport(max(1.0, worst), False, witnesses, True, EXACT)
    return _refine_torus_bar(symbol, ratios)


def _zoom(symbol, theta0, func, spacing):
    """Local refinement around ``theta0``; returns (best, theta, trace, M_eff)."""
    M_eff = symbol.grid_size
    best_theta, best = theta0, float(func(symbol.evaluate([theta0]))[0])
    trace = [best]
    while M_eff < 2**20 and symbol.lipschitz_bound * math.pi / M_eff >= 1e-6:
        M_eff *= 4
        spacing /= 4
        local = best_theta + spacing * np.arange(-8, 9)
        vals = func(symbol.evaluate(local))
        if np.any(np.isinf(vals)):
            j = int(np.flatnonzero(np.isinf(vals))[0])
            return math.inf, float(local[j]), trace + [math.inf], M_eff
        vals = np.where(np.isnan(vals), -np.inf, vals)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, best_theta = float(vals[j]), float(local[j])
        trace.append(best)
    return best, best_theta, trace, M_eff


def _refine_torus_bar(symbol, ratios):
    spacing = 2 * math.pi / symbol.grid_size
    finite = np.where(np.isnan(ratios), -np.inf, ratios)
    i = int(np.argmax(finite))
    best, theta, trace, M_eff = _zoom(symbol, float(symbol.thetas[i]), _bar_ratios, spacing)
    eps = symbol.lipschitz_bound * math.pi / M_eff
    if math.isinf(best):
        return BarReport(math.inf, True, [theta], True, GRID, eps)
    growing = len(trace) > 2 and all(b > 1.5 * a for a, b in zip(trace[-3:-1], trace[-2:]))
    return BarReport(max(1.0, best), False, [theta], False, GRID, eps,
                     {"refinement_trace": trace, "unbounded_suspected": growing})


def point_stolz_angles(values, tol=ANGLE_TOL):
    """Per-value minimal Stolz angle by bisection; inf where none exists."""
    values = np.asarray(values, dtype=complex)
    one = np.abs(1 - values) <= ONE_TOL
    outside = (np.abs(values) >= 1 - UNIMODULAR_TOL) & ~one
    lo = np.zeros(values.shape)
    hi = np.full(values.shape, math.pi / 2)
    active = ~(one | outside)
    z = values[active]
    a, b = lo[active], hi[active]
    while z.size and np.max(b - a) > tol / 4:
        mid = 0.5 * (a + b)
        s, c = np.sin(mid), np.cos(mid)
        w = 1 - z
        inside = (np.abs(z) <= s) | ((np.abs(np.angle(w)) <= mid) & (np.abs(w) <= c))
        b = np.where(inside, mid, b)
        a = np.where(inside, a, mid)
    out = np.zeros(values.shape)
    out[active] = np.where(b < tol, 0.0, b)
    out[outside] = math.inf
    return out


def minimal_stolz_angle(symbol):
    """Smallest gamma with every symbol value in the closure of B_gamma.

    Returns an ``AngleReport``; ``gamma == 0`` means any positive angle works,
    ``fails`` means some value lies in no Stolz closure.
    """
    values = _check_symbol_values(symbol.values)
    angles = point_stolz_angles(values)
    i = int(np.argmax(angles))
    cert = EXACT if symbol.kind == "finite-dual" else GRID
    if math.isinf(angles[i]):
        return AngleReport(math.inf, True, symbol.witness(i), cert, symbol.epsilon)
    if symbol.kind == "finite-dual":
        return AngleReport(float(angles[i]), False, symbol.witness(i), cert)
    best, theta, _, M_eff = _zoom(symbol, float(symbol.thetas[i]), point_stolz_angles,
                                  2 * math.pi / symbol.grid_size)
    best = max(best, float(angles[i]))
    eps = symbol.lipschitz_bound * math.pi / M_eff
    return AngleReport(best, math.isinf(best), theta, cert, eps)

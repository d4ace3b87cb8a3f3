"""Config-driven analyses, JSON reports and CSV plot data.

A config is a JSON object with a ``command`` key; see ``COMMANDS``.  The
report is a plain dict that serialises deterministically: wall-clock
timings are kept on the side (``Report.timings``) so that the same config
and seed always give the same bytes.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import csv
import io
import json
import math
import os
import tempfile
import time

import numpy as np

from . import __version__
from .exceptions import ConfigurationError, StructuralError
from .funcalc import Polynomial, hinf_ratio, polynomial_family
from .groups import FiniteAbelianGroup, Integers
from .measures import Measure, ProbabilityMeasure, fourier_symbol
from .norms import NormTag
from .operators import (
    LinearOperator,
    _eig_ritt_sup,
    convolution_operator,
    operator_norm,
    ritt_constants,
    ritt_profile,
    sectorial_constant,
)
from .representations import trial_seeds, transference_trial
from .stolz import EXACT, GRID, _num, bar_constant, minimal_stolz_angle, phi_n_sup, stolz_boundary, stolz_ratio_constant
from .tensor import (
    kconvexity_sweep,
    random_reversible_chain,
    regular_norm_lower,
    rota_dilation,
    subordination_chain_check,
)

COMMANDS = ("analyze-measure", "analyze-operator", "transference", "tensor-chain", "dilation", "sweep")


def thread_count():
    """Worker pool size from ``RITTKIT_THREADS`` (default 1)."""
    raw = os.environ.get("RITTKIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"RITTKIT_THREADS={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigurationError(f"RITTKIT_THREADS={n} must be >= 1")
    return n


def _pool_map(fn, items):
    # results come back in input order, so reduction is deterministic
    items = list(items)
    n = min(thread_count(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class Series:
    columns: list
    rows: list

    def to_dict(self):
        return {"columns": self.columns, "rows": self.rows}


@dataclass
class Report:
    command: str
    config: dict
    seed: object
    results: dict
    series: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self):
        return {
            "command": self.command,
            "toolkit_version": self.version,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
            "series": {k: v.to_dict() for k, v in sorted(self.series.items())},
            "notes": self.notes,
        }

    def to_json(self):
        return json.dumps(jsonable(self.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def jsonable(obj):
    """Recursively convert numpy scalars, complex numbers and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, Polynomial):
        return obj.to_list()
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# config parsing -------------------------------------------------------------------


class _Config:
    """Typed access to a config dict; every error names the offending field."""

    def __init__(self, data, prefix=""):
        if not isinstance(data, dict):
            raise ConfigurationError(f"{prefix or 'config'}: expected an object")
        self.data, self.prefix = data, prefix

    def _name(self, key):
        return f"{self.prefix}{key}"

    def has(self, key):
        return key in self.data

    def raw(self, key, default=None):
        return self.data.get(key, default)

    def int(self, key, default=None, minimum=1, maximum=None):
        v = self.data.get(key, default)
        if v is None:
            raise ConfigurationError(f"{self._name(key)}: required integer is missing")
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum or (maximum is not None and v > maximum):
            bound = f" and <= {maximum}" if maximum is not None else ""
            raise ConfigurationError(f"{self._name(key)}={v!r} must be an integer >= {minimum}{bound}")
        return v

    def float(self, key, default=None, low=None, high=None, allow_inf=False):
        v = self.data.get(key, default)
        if v is None:
            raise ConfigurationError(f"{self._name(key)}: required number is missing")
        if allow_inf and v in ("inf", "Infinity"):
            v = math.inf
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigurationError(f"{self._name(key)}={v!r} must be a number")
        v = float(v)
        if math.isnan(v) or (math.isinf(v) and not allow_inf):
            raise ConfigurationError(f"{self._name(key)}={v!r} must be finite")
        if (low is not None and v <= low) or (high is not None and v >= high):
            raise ConfigurationError(f"{self._name(key)}={v!r} must lie in ({low}, {high})")
        return v

    def exponent(self, key, default=2.0):
        v = self.float(key, default, allow_inf=True)
        if v < 1:
            raise ConfigurationError(f"{self._name(key)}={v!r} must lie in [1, inf]")
        return v

    def bool(self, key, default=False):
        v = self.data.get(key, default)
        if not isinstance(v, bool):
            raise ConfigurationError(f"{self._name(key)}={v!r} must be true or false")
        return v

    def sub(self, key, default=None):
        v = self.data.get(key, default)
        if v is None:
            raise ConfigurationError(f"{self._name(key)}: required section is missing")
        return _Config(v, self._name(key) + ".")

    def list(self, key, default=None):
        v = self.data.get(key, default)
        if not isinstance(v, list) or not v:
            raise ConfigurationError(f"{self._name(key)}: expected a non-empty list")
        return v


def _wrap(field_name, fn, *args):
    """Re-raise module validation errors with the config field prefixed."""
    try:
        return fn(*args)
    except (ConfigurationError, StructuralError) as exc:
        raise type(exc)(f"{field_name}: {exc}") from exc
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigurationError(f"{field_name}: {exc}") from exc


def _parse_group(cfg, key="group"):
    raw = cfg.raw(key)
    if raw is None:
        raise ConfigurationError(f"{cfg._name(key)}: required group descriptor is missing")
    if raw in ("Z", "integers"):
        return Integers()
    if isinstance(raw, int):
        raw = [raw]
    if not isinstance(raw, list) or not raw or any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in raw):
        raise ConfigurationError(f"{cfg._name(key)}={raw!r} must be 'Z' or a list of positive cyclic orders")
    return FiniteAbelianGroup(tuple(raw))


def _parse_measure(cfg, key, group, probability=False):
    """Measure from ``{"atoms": [[point, re, im?], ...]}`` or ``{"weights": [...]}``."""
    sec = cfg.sub(key)
    name = cfg._name(key)
    if sec.has("weights"):
        if isinstance(group, Integers):
            raise ConfigurationError(f"{name}.weights: only valid on a finite group; use atoms on Z")
        w = sec.list("weights")
        if len(w) != group.order:
            raise ConfigurationError(f"{name}.weights: {len(w)} weights for a group of order {group.order}")
        nu = _wrap(name, Measure.from_weights, group, np.asarray(w, dtype=float))
    elif sec.has("atoms"):
        data = {"carrier": group.to_descriptor(), "atoms": sec.list("atoms")}
        nu = _wrap(name, Measure.from_dict, data)
    else:
        raise ConfigurationError(f"{name}: give either 'atoms' or 'weights'")
    if probability:
        nu = _wrap(name, ProbabilityMeasure, nu.carrier, dict(nu.atoms))
    return nu


def _parse_matrix(cfg, key="matrix"):
    name = cfg._name(key)
    try:
        A = np.asarray(cfg.list(key), dtype=float)
        if cfg.has(key + "_imag"):
            A = A + 1j * np.asarray(cfg.list(key + "_imag"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name}: {exc}") from exc
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigurationError(f"{name}: expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConfigurationError(f"{name}: entries must be finite")
    return A


def _resolve_seed(cfg, seed, required):
    if seed is None:
        seed = cfg.raw("seed")
    if seed is None:
        if required:
            raise ConfigurationError("seed: this command draws random numbers and needs a seed (config or --seed)")
        return 0
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigurationError(f"seed={seed!r} must be a non-negative integer")
    return seed


# commands ---------------------------------------------------------------------------


def _locus_series(values):
    return Series(["re", "im"], [[float(v.real), float(v.imag)] for v in values])


def _boundary_series(gamma, n_points=512):
    pts = stolz_boundary(gamma, n_points)
    return Series(["re", "im"], [[float(z.real), float(z.imag)] for z in pts])


def _analyze_measure(cfg, seed):
    G = _parse_group(cfg)
    nu = _parse_measure(cfg, "measure", G)
    nmax = cfg.int("nmax", 256, maximum=100_000)
    M = cfg.int("grid", 4096) if isinstance(G, Integers) else None
    symbol = _wrap("grid", fourier_symbol, nu, M)
    bar = bar_constant(symbol)
    angle = minimal_stolz_angle(symbol)
    results = {"group": G.to_descriptor(), "measure": nu.to_dict(), "symbol": symbol.to_dict(),
               "bar": bar.to_dict(), "gamma_star": angle.to_dict()}
    series, notes = {"locus": _locus_series(symbol.values)}, []

    if isinstance(G, Integers):
        vals = symbol.values
        c1 = float(np.max(_eig_ritt_sup(vals, None if bar.finite else nmax)))
        results["ritt"] = {
            "c1": _num(c1),
            "c0": 1.0 if np.max(np.abs(vals)) <= 1 else _num(np.max(np.abs(vals))),
            "verdict": "ritt-grid" if bar.finite else "not-ritt",
            "certificate": GRID,
            "epsilon": symbol.epsilon,
        }
        r, d = np.abs(vals), np.abs(vals - 1)
        profile = [[n, float(n * np.max(r ** (n - 1) * d))] for n in range(1, nmax + 1)]
    else:
        T = convolution_operator(nu, G)
        report = ritt_constants(T, nmax)
        results["ritt"] = {**report.to_record(), "certificate": EXACT if T.exact_l2 else "mesh-lower-bound"}
        profile = [[n, v] for n, _, v in ritt_profile(T, nmax)[1:]]
    series["ritt_profile"] = Series(["n", "value"], profile)

    if angle.fails:
        notes.append("symbol leaves every Stolz domain; no boundary drawn")
    elif angle.gamma == 0:
        notes.append("minimal Stolz angle is 0; the boundary degenerates to the point 1")
    else:
        series["boundary"] = _boundary_series(angle.gamma)

    if cfg.has("calculus"):
        results["calculus"] = _calculus_grid(cfg.sub("calculus"), G, nu, angle, seed)
    return results, series, notes


def _calculus_grid(cfg, G, nu, angle, seed):
    if isinstance(G, Integers):
        raise ConfigurationError("calculus: the polynomial calculus grid needs a finite group")
    if angle.fails:
        return {"skipped": "spectrum is not contained in any Stolz domain"}
    fam = polynomial_family(cfg.int("nmax", 16), cfg.int("n_random", 32, minimum=0), cfg.int("degree", 8), seed)
    if cfg.has("gammas"):
        gammas = [float(g) for g in cfg.list("gammas")]
    else:
        lo = angle.gamma
        gammas = [lo + (math.pi / 2 - lo) * k / 4 for k in (1, 2, 3)]
    bad = [g for g in gammas if not (angle.gamma <= g < math.pi / 2) or g <= 0]
    if bad:
        raise ConfigurationError(f"calculus.gammas: {bad} must lie in [gamma*, pi/2) and be positive")
    T = convolution_operator(nu, G)
    reports = _pool_map(lambda g: hinf_ratio(T, g, family=fam, seed=seed), gammas)
    return [r.to_dict() for r in reports]


def _parse_space(cfg, dim):
    sec = cfg.sub("space", {})
    q = sec.raw("q")
    m = sec.int("m", 1)
    if dim % m:
        raise ConfigurationError(f"space.m={m} does not divide the matrix size {dim}")
    p = sec.exponent("p", 2.0)
    q = None if q is None else sec.exponent("q")
    weights = sec.raw("weights")
    return _wrap("space", NormTag, p, dim // m, q, m, weights)


def _analyze_operator(cfg, seed):
    A = _parse_matrix(cfg)
    space = _parse_space(cfg, A.shape[0])
    nmax = cfg.int("nmax", 64, maximum=10_000)
    restarts = cfg.int("restarts", 8)
    T = LinearOperator(A, space)
    rep = ritt_constants(T, nmax, resolvent=cfg.bool("resolvent"), restarts=restarts, seed=seed)
    norm = operator_norm(T, restarts, seed)
    results = {"space": space.to_dict(), "norm": norm.to_dict(), "ritt": rep.to_record(),
               "exact_l2": T.exact_l2}
    if cfg.has("sector_alpha"):
        alpha = cfg.float("sector_alpha", low=0, high=math.pi)
        I_minus_T = T.with_matrix(np.eye(T.dim) - A)
        results["sectorial"] = sectorial_constant(I_minus_T, alpha, restarts=restarts, seed=seed).to_dict()
    if cfg.has("gamma"):
        gamma = cfg.float("gamma", low=0, high=math.pi / 2)
        fam = polynomial_family(cfg.int("calculus_nmax", 16), cfg.int("n_random", 32, minimum=0), 8, seed)
        results["calculus"] = hinf_ratio(T, gamma, family=fam, seed=seed, restarts=restarts).to_dict()
    rows = ritt_profile(T, nmax, restarts, seed) if rep.profile is None else rep.profile
    series = {"ritt_profile": Series(["n", "power_norm", "value"], [list(r) for r in rows[1:]])}
    return results, series, []


def _transference(cfg, seed):
    N = cfg.int("N", 8, minimum=2, maximum=64)
    trials = cfg.int("trials", 100, maximum=10_000)
    max_dim = cfg.int("max_dim", 6, maximum=64)
    p = cfg.exponent("p", 2.0)
    records = _pool_map(lambda s: transference_trial(N, max_dim, p, s), trial_seeds(seed, trials))
    summary = {
        "trials": trials,
        "all_hold": all(r["holds"] for r in records),
        "review": sum(r["review"] for r in records),
        "min_slack": min(r["slack"] for r in records),
    }
    rows = [[i, r["seed"], r["lhs"], r["rhs"], r["slack"], r["holds"]] for i, r in enumerate(records)]
    series = {"transference": Series(["trial", "seed", "lhs", "rhs", "slack", "holds"], rows)}
    return {"summary": summary, "trials": records}, series, []


def _inner(cfg):
    raw = cfg.raw("inner", [2, 1])
    if not isinstance(raw, list) or len(raw) != 2:
        raise ConfigurationError(f"inner={raw!r} must be [q, m]")
    sec = _Config({"q": raw[0], "m": raw[1]}, "inner.")
    return sec.exponent("q"), sec.int("m")


def _tensor_chain(cfg, seed):
    G = _parse_group(cfg)
    if isinstance(G, Integers):
        raise ConfigurationError("group: the subordination chain needs a finite group")
    eta = _parse_measure(cfg, "eta", G, probability=True)
    p = cfg.exponent("p", 2.0)
    inner = _inner(cfg)
    nmax = cfg.int("nmax", 2, maximum=8)
    rows = subordination_chain_check(eta, G, p, inner, nmax, cfg.int("restarts", 32), seed)
    series = {"chain": Series(["n", "lhs", "middle", "rhs", "slack"],
                              [[r["n"], r["lhs"], r["middle"], r["rhs"], r["slack"]] for r in rows])}
    return {"p": p, "inner": list(inner), "rows": rows}, series, []


def _dilation(cfg, seed):
    if cfg.has("P"):
        P = _parse_matrix(cfg, "P").real
        pi = cfg.raw("pi")
        chains = [(P, None if pi is None else np.asarray(pi, dtype=float))]
    else:
        sec = cfg.sub("random")
        count = sec.int("chains", 100, maximum=10_000)
        max_states = sec.int("max_states", 8, minimum=2, maximum=64)
        chains = []
        for s in trial_seeds(seed, count):
            rng = np.random.default_rng(s)
            chains.append(random_reversible_chain(int(rng.integers(2, max_states + 1)), rng))

    def one(chain):
        P, pi = chain
        return {"states": P.shape[0], **rota_dilation(P, pi).residuals()}

    records = _pool_map(one, chains)
    cols = ["QJ_minus_I", "QEJ_minus_P2", "E2_minus_E", "E_ones_minus_ones", "E_min_entry", "J_isometry"]
    rows = [[i, r["states"]] + [r[c] for c in cols] for i, r in enumerate(records)]
    worst = {c: max(r[c] for r in records) for c in cols if c != "E_min_entry"}
    worst["E_min_entry"] = min(r["E_min_entry"] for r in records)
    series = {"residuals": Series(["chain", "states"] + cols, rows)}
    return {"chains": len(records), "worst": worst, "records": records}, series, []


def _sweep(cfg, seed):
    kind = cfg.raw("kind")
    if kind == "kconvexity":
        q = cfg.exponent("q", 1.0)
        ms = [int(m) for m in cfg.list("ms", [1, 2, 3, 4])]
        N = cfg.int("N", 4, maximum=12)
        rows = kconvexity_sweep(q, ms, N, cfg.int("restarts", 16), seed)
        series_rows = [[r["m"], r["value"], r["certificate"], r["seed"]] for r in rows]
        header = ["m", "value", "certificate", "seed"]
    elif kind == "regular":
        if cfg.has("matrix"):
            A = _parse_matrix(cfg)
            T = LinearOperator(A, NormTag.lp(cfg.exponent("p", 2.0), A.shape[0]))
        else:
            G = _parse_group(cfg)
            nu = _parse_measure(cfg, "measure", G)
            T = convolution_operator(nu, G, NormTag.lp(cfg.exponent("p", 2.0), G.order))
        values = regular_norm_lower(T, cfg.int("nmax", 8, maximum=64), cfg.int("restarts", 16), seed)
        series_rows = [[c.meta["n"], c.value, c.certificate, seed] for c in values]
        header = ["n", "value", "certificate", "seed"]
    elif kind == "phi_n":
        gamma = cfg.float("gamma", math.pi / 4, low=0, high=math.pi / 2)
        ns = [int(n) for n in cfg.list("ns", [1, 2, 4, 8, 16, 32, 64])]
        sups = _pool_map(lambda n: phi_n_sup(n, gamma), ns)
        C = stolz_ratio_constant(gamma).value
        series_rows = [[n, s.value, s.certificate, seed] for n, s in zip(ns, sups)]
        header = ["n", "value", "certificate", "seed"]
        return ({"kind": kind, "gamma": gamma, "stolz_ratio_constant": C,
                 "bounds": [C * (1 - 1 / n) ** (n - 1) for n in ns]},
                {"sweep": Series(header, series_rows)}, [])
    else:
        raise ConfigurationError(f"kind={kind!r} must be one of 'kconvexity', 'regular', 'phi_n'")
    return {"kind": kind}, {"sweep": Series(header, series_rows)}, []


_RUNNERS = {
    "analyze-measure": _analyze_measure,
    "analyze-operator": _analyze_operator,
    "transference": _transference,
    "tensor-chain": _tensor_chain,
    "dilation": _dilation,
    "sweep": _sweep,
}


def _needs_seed(command, cfg):
    if command in ("transference", "sweep"):
        return True
    if command == "dilation":
        return not cfg.has("P")
    return cfg.has("calculus") or cfg.has("gamma")


def run(config, seed=None, command=None):
    """Validate ``config`` and run its analysis; returns a ``Report``."""
    cfg = _Config(config)
    command = command or cfg.raw("command")
    if command not in COMMANDS:
        raise ConfigurationError(f"command={command!r} must be one of {', '.join(COMMANDS)}")
    if cfg.has("command") and cfg.raw("command") != command:
        raise ConfigurationError(f"command: config says {cfg.raw('command')!r}, invoked as {command!r}")
    seed = _resolve_seed(cfg, seed, _needs_seed(command, cfg))
    start = time.perf_counter()
    results, series, notes = _RUNNERS[command](cfg, seed)
    elapsed = time.perf_counter() - start
    echo = jsonable({**config, "command": command, "seed": seed})
    return Report(command, echo, seed, jsonable(results), series, notes, {"run_seconds": elapsed})


# output -----------------------------------------------------------------------------


def atomic_write(path, text):
    """Write UTF-8 text with LF endings via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else _num(x)
    return str(x)


def series_csv(series):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(series.columns)
    for row in series.rows:
        writer.writerow([_csv_cell(jsonable(x)) for x in row])
    return buf.getvalue()


def export_plot_data(report, which, out_dir):
    """Write the named series of ``report`` to ``out_dir/<which>.csv``; returns the path."""
    if which not in report.series:
        available = ", ".join(sorted(report.series)) or "none"
        raise StructuralError(f"report has no series {which!r} (available: {available})")
    path = os.path.join(out_dir, f"{which}.csv")
    atomic_write(path, series_csv(report.series[which]))
    return path


def write_report(report, out_dir):
    """Write ``report.json``, every series CSV and ``timings.json``; returns the paths."""
    paths = [os.path.join(out_dir, "report.json")]
    atomic_write(paths[0], report.to_json())
    paths += [export_plot_data(report, name, out_dir) for name in sorted(report.series)]
    timings = os.path.join(out_dir, "timings.json")
    atomic_write(timings, json.dumps(report.timings, sort_keys=True, indent=2) + "\n")
    return paths + [timings]

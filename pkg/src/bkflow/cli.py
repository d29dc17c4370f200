"""Batch runner: ``bkflow <command> --config <path> [--out <dir>] [--seed <u64>] [--override key=value ...]``.

A config is one JSON object::

    {
      "seed": 0,
      "model": {"type": "lattice", "sites": [0], "values": [2.0]},
      "params": {...},
      "output": {"dir": "out", "csv": true}
    }

Model types: ``lattice`` (one potential), ``random`` (Hermitian pairs with a
low-rank perturbation), ``random_projections``, ``random_lattice`` (several
random potentials) and ``phases`` (diagonal family ``e^{i(s_j lam + c_j)}``).
Each run writes ``report.json`` with top-level keys ``version``, ``config``,
``verdict`` and ``data``, plus ``<command>.csv`` where a series exists.

Exit status: 0 pass, 1 contract failure, 2 indeterminate (stability gate or
numerical rejection), 64 configuration error.
"""
import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import BKFlowError
from .experiments import (
    L_SWEEP,
    exact_gap_index,
    lattice_family,
    ssf_smoothed,
    verify_bk,
    verify_e1,
    verify_thm0,
    xi_truncated,
)
from .lattice import LatticePotential, s_matrix, s_matrix_grid, s_matrix_stationary, smooth_kernel_Z
from .linalg import eig_unitary, eigh, unitarity_defect
from .projections import fredholm_index, pairing_defect, xi_finite
from .random_models import (
    check_seed,
    random_pair,
    random_potential,
    random_projection,
    stream,
)
from .specflow import UnitaryFamilySample, naive_crossing_count, refine, spectral_flow
from .ssf import builtin_test_functions, ssf_finite, trace_formula_residual

SCHEMA_VERSION = 1
COMMANDS = ("index", "ssf", "scatter", "flow", "verify-thm0", "verify-e1", "verify-bk", "sweep")
MODEL_TYPES = ("lattice", "random", "random_projections", "random_lattice", "phases")
EXIT_PASS, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_CONFIG = 0, 1, 2, 64
_STATUS = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "indeterminate": EXIT_INDETERMINATE}


class ConfigError(BKFlowError):
    """Malformed or out-of-range configuration (exit status 64)."""


# -- config handling ------------------------------------------------------

def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def apply_override(cfg, item):
    """Set a dotted ``key=value`` in ``cfg``; the value is parsed as JSON if it can be."""
    if "=" not in item:
        raise ConfigError(f"override {item!r}: expected key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {key!r}: {p!r} is not an object")
        node = nxt
    node[parts[-1]] = value


def _num(params, key, default=None, kind=float, field="params"):
    value = params.get(key, default)
    if value is None:
        raise ConfigError(f"{field}.{key}: required")
    try:
        out = kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}.{key}: expected {kind.__name__}, got {value!r}") from exc
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"{field}.{key}: must be finite")
    return out


def _int_list(params, key, default):
    value = params.get(key, default)
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"params.{key}: expected a non-empty list of integers")
    try:
        return [int(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{key}: expected integers, got {value!r}") from exc


def _float_list(params, key, default=None):
    value = params.get(key, default)
    if value is None:
        raise ConfigError(f"params.{key}: required")
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"params.{key}: expected a non-empty list of numbers")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{key}: expected numbers, got {value!r}") from exc


def _in_band(lam, key):
    if not -2.0 < lam < 2.0:
        raise ConfigError(f"params.{key}={lam!r}: λ outside open band (−2,2)")
    return lam


def _model(cfg, allowed):
    model = cfg.get("model")
    if not isinstance(model, dict):
        raise ConfigError("model: required object")
    kind = model.get("type", "lattice")
    if kind not in MODEL_TYPES:
        raise ConfigError(f"model.type: unknown {kind!r}; expected one of {list(MODEL_TYPES)}")
    if kind not in allowed:
        raise ConfigError(f"model.type: {kind!r} not supported here; expected one of {list(allowed)}")
    return kind, model


def _potential(model):
    try:
        return LatticePotential.from_dict(model)
    except BKFlowError as exc:
        raise ConfigError(f"model: {exc}") from exc


def resolve(cfg, command, seed=None, out=None):
    """Fill defaults and validate; returns the resolved config dictionary."""
    cfg = copy.deepcopy(cfg)
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown {command!r}; expected one of {list(COMMANDS)}")
    if cfg.get("command", command) != command:
        raise ConfigError(f"command: config is for {cfg['command']!r}, invoked as {command!r}")
    cfg["command"] = command
    if seed is not None:
        cfg["seed"] = seed
    try:
        cfg["seed"] = check_seed(cfg.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed: {exc}") from exc
    cfg.setdefault("params", {})
    if not isinstance(cfg["params"], dict):
        raise ConfigError("params: expected an object")
    output = cfg.setdefault("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output: expected an object")
    if out is not None:
        output["dir"] = str(out)
    output.setdefault("dir", "bkflow-out")
    output.setdefault("csv", True)
    return cfg


# -- commands ---------------------------------------------------------------
# each returns (verdict, data, csv_rows) with csv_rows = (header, rows) or None

def _random_probes(rng, wa, wb, count, gap=1e-6):
    lo = min(wa[0], wb[0]) - 0.5
    hi = max(wa[-1], wb[-1]) + 0.5
    both = np.concatenate([wa, wb])
    out = []
    while len(out) < count:
        lam = float(rng.uniform(lo, hi))
        if np.min(np.abs(both - lam)) > gap:
            out.append(lam)
    return out


def cmd_index(cfg):
    kind, model = _model(cfg, ("lattice", "random", "random_projections"))
    p, seed = cfg["params"], cfg["seed"]
    if kind == "random":
        count = _num(model, "count", 20, int, "model")
        dim = _num(model, "dim", 20, int, "model")
        rank = _num(model, "rank", 3, int, "model")
        probes = _num(p, "probes", 50, int)
        rows, mismatches = [], 0
        for i in range(count):
            rng = stream(seed, i)
            A, B = random_pair(rng, dim, rank)
            wa, wb = eigh(A).eigenvalues, eigh(B).eigenvalues
            for lam in _random_probes(rng, wa, wb, probes):
                brute = int(np.count_nonzero(wa < lam) - np.count_nonzero(wb < lam))
                xi, s = xi_finite(A, B, lam), ssf_finite(A, B, lam)
                ok = xi == s == brute
                mismatches += not ok
                rows.append([i, lam, xi, s, brute])
        data = {"pairs": count, "probes": probes, "mismatches": mismatches}
        return ("pass" if mismatches == 0 else "fail"), data, (
            ["pair", "lambda", "xi_finite", "ssf_finite", "brute_count"], rows)
    if kind == "random_projections":
        count = _num(model, "count", 200, int, "model")
        dmin = _num(model, "dim_min", 4, int, "model")
        dmax = _num(model, "dim_max", 40, int, "model")
        tol = _num(p, "tol", 1e-8)
        rows, failures = [], []
        worst = {"trace": 0.0, "pairing": 0.0}
        for i in range(count):
            rng = stream(seed, i)
            dim = int(rng.integers(dmin, dmax + 1))
            rp, rq = (int(r) for r in rng.integers(0, dim + 1, 2))
            P, Q = random_projection(rng, dim, rp), random_projection(rng, dim, rq)
            res = fredholm_index(P, Q)
            back = fredholm_index(Q, P)
            trace = abs(float(np.trace(P - Q).real) - res.index)
            pair = pairing_defect(np.linalg.eigvalsh(P - Q))
            worst["trace"] = max(worst["trace"], trace)
            worst["pairing"] = max(worst["pairing"], pair)
            ok = trace <= tol and res.index == rp - rq and back.index == -res.index and pair <= tol
            if not ok:
                failures.append(i)
            rows.append([i, dim, rp, rq, res.index, back.index, trace, pair])
        data = {"pairs": count, "failures": failures, "worst": worst, "tol": tol}
        return ("pass" if not failures else "fail"), data, (
            ["pair", "dim", "rank_p", "rank_q", "index", "index_swapped", "trace_defect",
             "pairing_defect"], rows)
    pot = _potential(model)
    lams = _float_list(p, "lambdas")
    L_sweep = _int_list(p, "L_sweep", list(L_SWEEP))
    entries, rows, verdict = [], [], "pass"
    for lam in lams:
        est = xi_truncated(pot, lam, L_sweep)
        entry = {"lambda": lam, "estimate": est.to_dict(), "exact": None}
        if abs(lam) > 2.0:
            entry["exact"] = exact_gap_index(pot, lam)
        if not est.stable:
            verdict = "indeterminate" if verdict == "pass" else verdict
        elif entry["exact"] is not None and est.value != entry["exact"]:
            verdict = "fail"
        entries.append(entry)
        rows.append([lam, est.value, est.stable, entry["exact"]])
    return verdict, {"entries": entries}, (["lambda", "xi", "stable", "exact"], rows)


def cmd_ssf(cfg):
    kind, model = _model(cfg, ("lattice", "random"))
    p, seed = cfg["params"], cfg["seed"]
    if kind == "random":
        count = _num(model, "count", 50, int, "model")
        dim = _num(model, "dim", 20, int, "model")
        rank = _num(model, "rank", 3, int, "model")
        tol = _num(p, "tol", 1e-6)
        rows, worst = [], 0.0
        for i in range(count):
            A, B = random_pair(stream(seed, i), dim, rank)
            spec = np.concatenate([eigh(A).eigenvalues, eigh(B).eigenvalues])
            for phi in builtin_test_functions(float(spec.min()), float(spec.max())):
                r = trace_formula_residual(A, B, phi)
                worst = max(worst, r)
                rows.append([i, phi.name, r])
        data = {"pairs": count, "functions": 5, "max_residual": worst, "tol": tol}
        return ("pass" if worst <= tol else "fail"), data, (["pair", "function", "residual"], rows)
    pot = _potential(model)
    L = _num(p, "L", 800, int)
    w = _num(p, "w", 0.1)
    points = _num(p, "points", 2001, int)
    method = p.get("method", "exact")
    if method not in ("exact", "sturm", "eigvals"):
        raise ConfigError(f"params.method: unknown {method!r}")
    rows = []
    for lam in _float_list(p, "lambdas"):
        rows.append([lam, ssf_smoothed(pot, lam, L, w, points, method)])
    return "pass", {"L": L, "w": w, "values": rows}, (["lambda", "xi_smoothed"], rows)


def cmd_scatter(cfg):
    kind, model = _model(cfg, ("lattice", "random_lattice"))
    p, seed = cfg["params"], cfg["seed"]
    a = _in_band(_num(p, "a", -1.5), "a")
    b = _in_band(_num(p, "b", 1.5), "b")
    if not a < b:
        raise ConfigError("params.a must be below params.b")
    points = _num(p, "points", 200, int)
    u_tol = _num(p, "unitarity_tol", 1e-10)
    r_tol = _num(p, "route_tol", 1e-8)
    if kind == "lattice":
        pots = [_potential(model)]
    else:
        count = _num(model, "count", 10, int, "model")
        pots = [random_potential(stream(seed, i), _num(model, "max_support", 5, int, "model"),
                                 _num(model, "vmax", 3.0, float, "model")) for i in range(count)]
    lams = np.linspace(a, b, points)
    rows, summaries, ok = [], [], True
    for i, pot in enumerate(pots):
        Ss = s_matrix_grid(pot, lams)
        unit = max(unitarity_defect(S) for S in Ss)
        route = max(float(np.abs(S - s_matrix_stationary(pot, lam)).max()) for lam, S in zip(lams, Ss))
        Z = np.array([smooth_kernel_Z(pot, lam) for lam in lams])
        slopes = np.abs(np.diff(Z, axis=0)).reshape(points - 1, -1).max(axis=1) / np.diff(lams)
        lip = float(slopes.max()) if slopes.size else 0.0
        # the same estimate on every other node must not be smaller by much
        lip_coarse = float((np.abs(Z[2::2] - Z[:-2:2]).reshape(-1, Z[0].size).max(axis=1)
                            / np.diff(lams[::2])[: (points - 1) // 2]).max()) if points > 4 else lip
        finite = math.isfinite(lip) and lip <= 2.0 * lip_coarse + 1e-12
        ok &= unit <= u_tol and route <= r_tol and finite
        summaries.append({"potential": pot.to_dict(), "unitarity_defect": unit, "route_defect": route,
                          "lipschitz": lip, "lipschitz_coarse": lip_coarse})
        for lam, S in zip(lams, Ss):
            ph = eig_unitary(S)
            rows.append([i, float(lam), float(ph[0]), float(ph[1]), 0.5 * float(np.linalg.norm(S - np.eye(2), 2))])
    data = {"points": points, "interval": [a, b], "potentials": summaries,
            "unitarity_tol": u_tol, "route_tol": r_tol}
    return ("pass" if ok else "fail"), data, (["potential", "lambda", "phase_1", "phase_2", "alpha"], rows)


def _phase_family(model, a, b, n_nodes):
    slopes = np.asarray(model.get("slopes", [math.pi]), dtype=np.float64)
    offsets = np.asarray(model.get("offsets", [0.0] * slopes.size), dtype=np.float64)
    if slopes.shape != offsets.shape:
        raise ConfigError("model.slopes and model.offsets must have equal length")

    def batch(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        out = np.zeros((xs.size, slopes.size, slopes.size), dtype=np.complex128)
        idx = np.arange(slopes.size)
        out[:, idx, idx] = np.exp(1j * (slopes[None, :] * xs[:, None] + offsets[None, :]))
        return out

    return UnitaryFamilySample.from_function(lambda x: batch([x])[0], a, b, n_nodes, batch=batch)


def cmd_flow(cfg):
    kind, model = _model(cfg, ("lattice", "phases"))
    p, seed = cfg["params"], cfg["seed"]
    a, b = _num(p, "a"), _num(p, "b")
    if not a < b:
        raise ConfigError("params.a must be below params.b")
    theta = _num(p, "theta", math.pi)
    if not 0.0 < theta < 2 * math.pi:
        raise ConfigError(f"params.theta={theta!r}: must lie in (0, 2pi)")
    n_nodes = _num(p, "n_nodes", 33, int)
    delta_step = _num(p, "delta_step", 1e-2)
    n_partitions = _num(p, "random_partitions", 0, int)
    if kind == "lattice":
        _in_band(a, "a")
        _in_band(b, "b")
        family = lattice_family(_potential(model), a, b, n_nodes)
    else:
        family = _phase_family(model, a, b, n_nodes)
    fr = spectral_flow(family, theta, delta_step=delta_step)
    fam = refine(family, fr.delta_step)
    naive = naive_crossing_count(fam, theta)
    greedy = sorted({int(np.searchsorted(fam.lambdas, s.lam_a)) for s in fr.partition}
                    | {fam.lambdas.size - 1})
    admissible = np.flatnonzero(
        np.all(np.abs(((fam.phases - theta + math.pi) % (2 * math.pi)) - math.pi) > 1e-8, axis=1))
    rng = stream(seed, 0)
    part_flows = []
    for _ in range(n_partitions):
        extra = rng.choice(admissible, size=min(admissible.size, int(rng.integers(1, 20))), replace=False)
        cuts = sorted(set(greedy) | {int(c) for c in extra})
        part_flows.append(spectral_flow(fam, theta, delta_step=fr.delta_step, partition=cuts).flow)
    consistent = all(f == fr.flow for f in part_flows) and naive == fr.flow
    data = {"flow": fr.to_dict(), "naive_count": naive, "partition_flows": part_flows}
    verdict = "pass" if consistent else "fail"
    if "expected" in p:
        data["expected"] = _num(p, "expected", kind=int)
        if fr.flow != data["expected"]:
            verdict = "fail"
    nph = fam.phases.shape[1]
    rows = [[float(lam)] + [float(x) for x in ph] for lam, ph in zip(fam.lambdas, fam.phases)]
    return verdict, data, (["lambda"] + [f"phase_{j + 1}" for j in range(nph)], rows)


def cmd_verify_thm0(cfg):
    _, model = _model(cfg, ("lattice",))
    p = cfg["params"]
    lam = _in_band(_num(p, "lambda"), "lambda")
    rep = verify_thm0(_potential(model), lam, _int_list(p, "L_sweep", list(L_SWEEP)),
                      p.get("delta"), _num(p, "tol", 0.05))
    rows = [[L, j, float(v)] for L, mu in rep.spectra.items() for j, v in enumerate(mu)]
    return ("pass" if rep.passed else "fail"), rep.to_dict(), (["L", "index", "value"], rows)


def cmd_verify_e1(cfg):
    _, model = _model(cfg, ("lattice",))
    p = cfg["params"]
    lam1 = _in_band(_num(p, "lambda1"), "lambda1")
    lam2 = _in_band(_num(p, "lambda2"), "lambda2")
    if not lam1 < lam2:
        raise ConfigError("params.lambda1 must be below params.lambda2")
    pot, n_nodes = _potential(model), _num(p, "n_nodes", 33, int)
    rep = verify_e1(pot, lam1, lam2, _int_list(p, "L_sweep", list(L_SWEEP)),
                    _num(p, "delta_step", 1e-2), n_nodes)
    verdict = {"match": "pass", "mismatch": "fail"}.get(rep.status, "indeterminate")
    # coarse eigenphase sweep for plotting; the flow itself used a refined family
    fam = lattice_family(pot, lam1, lam2, n_nodes)
    rows = [[float(lam), float(ph[0]), float(ph[1])] for lam, ph in zip(fam.lambdas, fam.phases)]
    return verdict, rep.to_dict(), (["lambda", "phase_1", "phase_2"], rows)


def cmd_verify_bk(cfg):
    _, model = _model(cfg, ("lattice",))
    p = cfg["params"]
    lam = _in_band(_num(p, "lambda"), "lambda")
    w = _num(p, "w", 0.1)
    if not -2.0 < lam - w and lam + w < 2.0:
        raise ConfigError(f"params.w={w!r}: smoothing window leaves the open band (−2,2)")
    tol = _num(p, "tol", 0.05)
    pot = _potential(model)
    method = p.get("method", "exact")
    if method not in ("exact", "sturm", "eigvals"):
        raise ConfigError(f"params.method: unknown {method!r}")
    reports = [verify_bk(pot, lam, L, w, _num(p, "points", 2001, int), tol, method)
               for L in _int_list(p, "L_sweep", [800])]
    defects = [r.defect_mod1 for r in reports]
    decreasing = all(y <= x + 1e-12 for x, y in zip(defects, defects[1:]))
    passed = reports[-1].passed and decreasing
    data = {"runs": [r.to_dict() for r in reports], "non_increasing": decreasing}
    rows = [[r.L, r.xi_est, r.phase_sum, r.defect_mod1] for r in reports]
    return ("pass" if passed else "fail"), data, (["L", "xi_smoothed", "phase_sum", "defect_mod1"], rows)


def cmd_sweep(cfg):
    """Index profile on a grid, with the jump identity checked between stable neighbours."""
    _, model = _model(cfg, ("lattice",))
    p = cfg["params"]
    a = _in_band(_num(p, "a"), "a")
    b = _in_band(_num(p, "b"), "b")
    points = _num(p, "points", 7, int)
    L_sweep = _int_list(p, "L_sweep", list(L_SWEEP))
    pot = _potential(model)
    lams = [float(x) for x in np.linspace(a, b, points)]
    ests, rows = [], []
    for lam in lams:
        try:
            est = xi_truncated(pot, lam, L_sweep)
            ests.append({"lambda": lam, "value": est.value, "stable": est.stable, "alpha": est.alpha})
        except BKFlowError as exc:
            ests.append({"lambda": lam, "value": None, "stable": False, "error": str(exc)})
        ph = s_matrix(pot, lam).phases
        rows.append([lam, ests[-1]["value"], ests[-1]["stable"], float(ph[0]), float(ph[1])])
    checks, verdict = [], "pass"
    for e1, e2 in zip(ests, ests[1:]):
        if not (e1["stable"] and e2["stable"]):
            verdict = "indeterminate" if verdict == "pass" else verdict
            continue
        fl = spectral_flow(lattice_family(pot, e1["lambda"], e2["lambda"]), math.pi).flow
        ok = e2["value"] - e1["value"] == -fl
        checks.append({"lambda1": e1["lambda"], "lambda2": e2["lambda"], "flow": fl, "match": ok})
        if not ok:
            verdict = "fail"
    return verdict, {"profile": ests, "checks": checks}, (
        ["lambda", "xi", "stable", "phase_1", "phase_2"], rows)


HANDLERS = {
    "index": cmd_index,
    "ssf": cmd_ssf,
    "scatter": cmd_scatter,
    "flow": cmd_flow,
    "verify-thm0": cmd_verify_thm0,
    "verify-e1": cmd_verify_e1,
    "verify-bk": cmd_verify_bk,
    "sweep": cmd_sweep,
}


# -- output -----------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True, default=_jsonable, allow_nan=False) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _clean(obj):
    # non-finite floats become strings so the report stays strict JSON
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def run(cfg, command, seed=None, out=None, write=True):
    """Execute one experiment.

    Returns
    -------
    status : int
        Exit status (0, 1, 2 or 64).
    report : dict or None
        ``None`` only for configuration errors.
    """
    try:
        cfg = resolve(cfg, command, seed, out)
        verdict, data, table = HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"bkflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except BKFlowError as exc:
        verdict, data, table = "indeterminate", {"error": f"{type(exc).__name__}: {exc}"}, None
    report = _clean({
        "version": {"schema": SCHEMA_VERSION, "bkflow": __version__},
        "config": cfg,
        "verdict": verdict,
        "data": data,
    })
    if write:
        outdir = Path(cfg["output"]["dir"])
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "report.json").write_text(dumps_report(report))
            if table is not None and cfg["output"].get("csv", True):
                (outdir / f"{command}.csv").write_text(_csv_text(*table))
        except OSError as exc:
            print(f"bkflow: config error: output.dir not writable: {exc}", file=sys.stderr)
            return EXIT_CONFIG, report
    return _STATUS[verdict], report


def build_parser():
    ap = argparse.ArgumentParser(prog="bkflow", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="64-bit seed (overrides the config seed)")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="set a dotted config field, e.g. params.lambda=0.5")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = load_config(args.config)
        for item in args.override:
            apply_override(cfg, item)
    except ConfigError as exc:
        print(f"bkflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status, report = run(cfg, args.command, args.seed, args.out)
    if report is not None:
        print(f"bkflow {args.command}: {report['verdict']}")
    return status


if __name__ == "__main__":
    sys.exit(main())

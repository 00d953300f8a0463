"""Command-line front end.

Every subcommand reads an optional TOML config (``--config``), lets explicit
flags override it, validates everything up front, writes its CSVs to a
staging directory and moves them into ``--out`` only on success, together
with a ``manifest.json``.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
Errors are reported on stderr as one JSON record.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import shutil
import sys
import tempfile
import time
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .model import CATALOGUE, LevyMeasure, ModelSpec, check_c4_condition, get_model

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("simulate", "estimate", "rate", "clt", "mixing", "invert-drift", "lower-bound")


class ValidationError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _floats(value) -> list:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _points(value, dim: int) -> np.ndarray:
    """``lo:hi:n`` or ``a,b,c`` in d=1; ``x1,x2;x1,x2`` (or nested lists) in d=2."""
    if isinstance(value, (list, tuple)):
        arr = np.asarray(value, float)
        return arr.reshape(-1, dim)
    s = str(value)
    if dim == 1:
        if ":" in s:
            lo, hi, n = s.split(":")
            return np.linspace(float(lo), float(hi), int(n))[:, None]
        return np.array(_floats(s))[:, None]
    return np.array([_floats(p) for p in s.split(";") if p.strip()], float).reshape(-1, 2)


def _grid(value) -> np.ndarray:
    """``lo:hi:step`` grid."""
    lo, hi, step = (float(v) for v in str(value).split(":"))
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def model_from_dict(d: dict) -> ModelSpec:
    """Inline model: ``{dim, drift = "tanh" | "linear", drift_scale, a, gamma, levy = {...}}``."""
    dim = int(d.get("dim", 1))
    kind = d.get("drift", "tanh")
    k = float(d.get("drift_scale", 1.0))
    if kind == "tanh":
        drift = lambda x: -np.tanh(k * x)
    elif kind == "linear":
        drift = lambda x: -k * x
    else:
        raise ValidationError([f"unknown drift {kind!r} (use 'tanh' or 'linear')"])
    lev = _levy_from_dict(d.get("levy", {"kind": "none"}), dim)
    return ModelSpec(dim, drift, float(d.get("a", 1.0)), float(d.get("gamma", 1.0)), lev, 0.0,
                     str(d.get("id", f"inline_{kind}_d{dim}")))


def _levy_from_dict(d: dict, dim: int) -> LevyMeasure:
    kind = d.get("kind", "none")
    if kind == "none":
        return LevyMeasure.none(dim)
    if kind == "cpois_gauss":
        return LevyMeasure.gaussian_compound_poisson(float(d.get("rate", 1.0)), d.get("scale", 1.0), d.get("mean", 0.0),
                                                     dim=dim, eps0=float(d.get("eps0", 1.0)))
    if kind == "tempered_stable":
        return LevyMeasure.tempered_stable(float(d["c"]), float(d["alpha"]), float(d["theta"]))
    raise ValidationError([f"unknown levy kind {kind!r}"])


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as a JSON validation record (exit 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"status": "error", "kind": "validation", "errors": [message]}) + "\n")
        sys.exit(EXIT_VALIDATION)


def _common(p):
    p.add_argument("--config", help="TOML file; flags override its values")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--seed", type=int, help="base seed (mandatory, flag or config)")
    p.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="jumpkde", description="Invariant density estimation for jump-diffusions.")
    ap.add_argument("--version", action="version", version=f"jumpkde {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate paths and write t,x1[,x2] CSVs")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--burn-in", dest="burn_in", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--record-every", dest="record_every", type=int)

    p = sub.add_parser("estimate", help="kernel density estimate from simulated or given paths")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--paths", help="CSV with columns t,x1[,x2] instead of simulating")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--points")
    p.add_argument("--kernel-order", dest="kernel_order", type=int)
    p.add_argument("--bandwidth", type=float)

    p = sub.add_parser("rate", help="risk across horizons and the fitted log-log slope")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--T", dest="T_grid")
    p.add_argument("--reps", type=int)
    p.add_argument("--x")
    p.add_argument("--dt", type=float)
    p.add_argument("--kernel-order", dest="kernel_order", type=int)
    p.add_argument("--reference", type=float)

    p = sub.add_parser("clt", help="normality and covariance of sqrt(T)(mu_hat - mean)")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--T", type=float)
    p.add_argument("--points")
    p.add_argument("--reps", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("mixing", help="lag covariances g_u(x, y)")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--u")
    p.add_argument("--reps", type=int)
    p.add_argument("--T-path", dest="T_path", type=float)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("invert-drift", help="drift with a prescribed invariant density")
    _common(p)
    p.add_argument("--f", dest="density", choices=["f0", "f1", "gaussian"])
    p.add_argument("--eta", type=float)
    p.add_argument("--var", type=float, help="variance for --f gaussian")
    p.add_argument("--a", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--levy", choices=["none", "cpois_gauss"])
    p.add_argument("--levy-rate", dest="levy_rate", type=float)
    p.add_argument("--levy-scale", dest="levy_scale", type=float)
    p.add_argument("--levy-eps0", dest="levy_eps0", type=float)
    p.add_argument("--grid", help="lo:hi:step")
    p.add_argument("--M-T", dest="M_T", type=float, help="bump scale 1/M_T for --f f1")
    p.add_argument("--H", type=float, help="bump width for --f f1")
    p.add_argument("--roundtrip-T", dest="roundtrip_T", type=float)
    p.add_argument("--roundtrip-reps", dest="roundtrip_reps", type=int)

    p = sub.add_parser("lower-bound", help="KL budget of the two-dimensional hypothesis family")
    _common(p)
    p.add_argument("--eta", type=float)
    p.add_argument("--T", dest="T_grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--v-fraction", dest="v_fraction", type=float, help="v^2 as a fraction of its cap")
    p.add_argument("--levy", choices=["none", "cpois_gauss"])
    p.add_argument("--levy-rate", dest="levy_rate", type=float)
    p.add_argument("--levy-scale", dest="levy_scale", type=float)
    return ap


DEFAULTS = {
    "workers": 1,
    "simulate": dict(T=100.0, dt=0.01, burn_in=10.0, reps=1, record_every=1),
    "estimate": dict(T=1000.0, dt=0.01, reps=1, points="-3:3:61", kernel_order=1, bandwidth=None, paths=None),
    "rate": dict(T_grid="250,500,1000,2000,4000", reps=200, x=None, dt=0.002, kernel_order=1, reference=None),
    "clt": dict(T=2000.0, points="0,1", reps=500, epsilon=0.1, dt=0.01),
    "mixing": dict(x="0", y="0", u="0:10:41", reps=20, T_path=2000.0, dt=0.01),
    "invert-drift": dict(density="f0", eta=0.25, var=0.5, a=1.0, gamma=1.0, levy="cpois_gauss", levy_rate=0.5,
                         levy_scale=0.04, levy_eps0=0.5, grid="-30:30:0.01", M_T=100.0, H=0.25,
                         roundtrip_T=None, roundtrip_reps=50),
    "lower-bound": dict(eta=0.25, T_grid="10000,100000,1000000", alpha=0.5, v_fraction=0.5, levy="cpois_gauss",
                        levy_rate=1.0, levy_scale=1.0),
}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags; collect every validation error."""
    cmd = args.command
    cfg = {"command": cmd, "workers": DEFAULTS["workers"], **DEFAULTS[cmd]}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                file_cfg = tomllib.load(fh)
        except OSError as exc:
            raise ValidationError([f"cannot read config {args.config}: {exc}"])
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError([f"malformed config {args.config}: {exc}"])
        if "command" in file_cfg and file_cfg["command"] != cmd:
            raise ValidationError([f"config is for {file_cfg['command']!r}, not {cmd!r}"])
        params = dict(file_cfg.get("params", {}))
        for k, v in file_cfg.items():
            if k != "params":
                params.setdefault(k, v)
        cfg.update({k.replace("-", "_"): v for k, v in params.items()})
    for k, v in vars(args).items():
        if k in ("config", "command") or v is None:
            continue
        cfg[k] = v
    errors = _validate(cfg)
    if errors:
        raise ValidationError(errors)
    return cfg


def _validate(cfg: dict) -> list:
    errs = []
    cmd = cfg["command"]
    if cfg.get("seed") is None:
        errs.append("seed is mandatory (--seed or `seed` in the config)")
    elif not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        errs.append("seed must be a nonnegative integer")
    if not cfg.get("output_dir"):
        errs.append("output directory is mandatory (--out or `output_dir`)")
    if not isinstance(cfg.get("workers"), int) or cfg["workers"] < 1:
        errs.append("workers must be an integer >= 1")
    if cmd in ("simulate", "estimate", "rate", "clt", "mixing") and not (cmd == "estimate" and cfg.get("paths")):
        m = cfg.get("model")
        if m is None:
            errs.append("model is mandatory (catalogue id or inline table)")
        elif isinstance(m, str) and m not in CATALOGUE:
            errs.append(f"unknown model {m!r}; known: {', '.join(CATALOGUE)}")
        elif not isinstance(m, (str, dict)):
            errs.append("model must be a catalogue id or a table")

    def positive(key, integer=False):
        v = cfg.get(key)
        try:
            ok = v is not None and (int(v) == v if integer else True) and float(v) > 0
        except (TypeError, ValueError):
            ok = False
        if not ok:
            errs.append(f"{key} must be a positive {'integer' if integer else 'number'}")

    if cmd in ("simulate", "estimate"):
        positive("T")
        positive("dt")
        positive("reps", True)
        dt, T = cfg.get("dt"), cfg.get("T")
        if isinstance(dt, (int, float)) and isinstance(T, (int, float)) and 0 < T < dt:
            errs.append("dt must not exceed T")
    if cmd == "simulate":
        if cfg.get("burn_in", 0) < 0:
            errs.append("burn_in must be nonnegative")
        positive("record_every", True)
    if cmd == "estimate":
        positive("kernel_order", True)
        if cfg.get("bandwidth") is not None and cfg["bandwidth"] <= 0:
            errs.append("bandwidth must be positive")
        if cfg.get("paths") and not os.path.exists(cfg["paths"]):
            errs.append(f"paths file {cfg['paths']} does not exist")
    if cmd == "rate":
        try:
            Ts = _floats(cfg["T_grid"])
            if len(Ts) < 4:
                errs.append("rate needs at least 4 horizons")
            if any(b / a < 2 - 1e-12 for a, b in zip(Ts, Ts[1:])):
                errs.append("horizons must be geometric with ratio >= 2")
        except (TypeError, ValueError):
            errs.append("T must be a comma-separated list of numbers")
        positive("reps", True)
        positive("dt")
        positive("kernel_order", True)
    if cmd == "clt":
        positive("T")
        positive("dt")
        if not isinstance(cfg.get("reps"), int) or cfg["reps"] < 100:
            errs.append("clt needs reps >= 100")
        if not 0 < float(cfg.get("epsilon", 0)) < 0.5:
            errs.append("epsilon must lie in (0, 1/2)")
    if cmd == "mixing":
        positive("reps", True)
        positive("T_path")
        positive("dt")
    if cmd == "invert-drift":
        if cfg.get("a") == 0:
            errs.append("a must be nonzero")
        if float(cfg.get("gamma", 0)) <= 0:
            errs.append("gamma must be positive")
        if cfg["density"] in ("f0", "f1") and not 0 < float(cfg.get("eta", 0)) < 0.5:
            errs.append("eta must lie in (0, 1/2)")
        try:
            g = _grid(cfg["grid"])
            if g.size < 2:
                errs.append("grid needs at least two points")
        except (TypeError, ValueError):
            errs.append("grid must be lo:hi:step")
    if cmd == "lower-bound":
        if not 0 < float(cfg.get("eta", 0)) < 0.5:
            errs.append("eta must lie in (0, 1/2)")
        if not 0 < float(cfg.get("alpha", 0)) <= 0.5:
            errs.append("alpha must lie in (0, 1/2]")
        try:
            if any(T <= math.e for T in _floats(cfg["T_grid"])):
                errs.append("every T must exceed e")
        except (TypeError, ValueError):
            errs.append("T must be a comma-separated list of numbers")
        if not 0 <= float(cfg.get("v_fraction", -1)):
            errs.append("v_fraction must be nonnegative")
    return errs


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _model(cfg) -> ModelSpec:
    m = cfg["model"]
    return get_model(m) if isinstance(m, str) else model_from_dict(m)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _cmd_simulate(cfg, out):
    from .simulate import SimConfig, simulate_ensemble, write_paths_csv

    spec = _model(cfg)
    sc = SimConfig(T=float(cfg["T"]), dt=float(cfg["dt"]), burn_in=float(cfg["burn_in"]), seed=cfg["seed"],
                   record_every=int(cfg["record_every"]))
    files = []
    for p in simulate_ensemble(spec, sc, int(cfg["reps"]), workers=cfg["workers"]):
        name = f"paths_rep{p.rep:04d}.csv"
        write_paths_csv(os.path.join(out, name), p)
        files.append(name)
    return files


def _cmd_estimate(cfg, out):
    from .kernel import DensityAccumulator, EstimateConfig, build_kernel, estimate_density
    from .simulate import SimConfig, read_paths_csv, run_blocks

    if cfg.get("paths"):
        path = read_paths_csv(cfg["paths"])
        dim = path.x.shape[1]
        pts = _points(cfg["points"], dim)
        est = estimate_density(path, EstimateConfig(pts, int(cfg["kernel_order"]), cfg.get("bandwidth")))
        values = est.values
    else:
        spec = _model(cfg)
        dim = spec.dim
        pts = _points(cfg["points"], dim)
        sc = SimConfig(T=float(cfg["T"]), dt=float(cfg["dt"]), seed=cfg["seed"])
        ec = EstimateConfig(pts, int(cfg["kernel_order"]), cfg.get("bandwidth"))
        h = ec.resolved_bandwidth(sc.T, dim)
        kern = build_kernel(ec.kernel_order)
        blocks = run_blocks(spec, sc, int(cfg["reps"]), lambda reps: DensityAccumulator(pts, kern, h, sc, len(reps)),
                            cfg["workers"])
        values = np.concatenate(blocks, axis=0).mean(axis=0)
    header = [f"x{i + 1}" for i in range(dim)] + ["mu_hat"]
    _write_rows(os.path.join(out, "density.csv"), header, [list(map(float, p)) + [float(v)] for p, v in zip(pts, values)])
    return ["density.csv"]


def _cmd_rate(cfg, out):
    from .experiments import rate_study

    spec = _model(cfg)
    x = np.zeros(spec.dim) if cfg.get("x") is None else _points(cfg["x"], spec.dim)[0]
    rep = rate_study(spec, _floats(cfg["T_grid"]), x, n_rep=int(cfg["reps"]), seed=cfg["seed"],
                     kernel_order=int(cfg["kernel_order"]), reference=cfg.get("reference"), dt=float(cfg["dt"]),
                     workers=cfg["workers"])
    rep.to_csv(os.path.join(out, "risk.csv"))
    return ["risk.csv"]


def _cmd_clt(cfg, out):
    from .experiments import clt_study

    spec = _model(cfg)
    rep = clt_study(spec, float(cfg["T"]), _points(cfg["points"], 1)[:, 0], n_rep=int(cfg["reps"]),
                    epsilon=float(cfg["epsilon"]), seed=cfg["seed"], dt=float(cfg["dt"]), workers=cfg["workers"])
    rep.to_csv(os.path.join(out, "clt.csv"))
    return ["clt.csv"]


def _cmd_mixing(cfg, out):
    from .experiments import estimate_gu

    spec = _model(cfg)
    rep = estimate_gu(spec, _points(cfg["x"], 1)[:, 0], _points(cfg["y"], 1)[:, 0], _points(cfg["u"], 1)[:, 0],
                      n_rep=int(cfg["reps"]), seed=cfg["seed"], T_path=float(cfg["T_path"]), dt=float(cfg["dt"]),
                      workers=cfg["workers"])
    rep.to_csv(os.path.join(out, "mixing.csv"))
    rows = [[float(x), float(y), float(rep.sigma[i, j]), float(rep.sigma_se[i, j]), float(rep.wcl1_integral[i, j]),
             float(rep.wcl2_integral[i, j]), float(rep.rho_hat[i, j])]
            for i, x in enumerate(rep.x_list) for j, y in enumerate(rep.y_list)]
    _write_rows(os.path.join(out, "mixing_summary.csv"),
                ["x", "y", "sigma", "sigma_se", "wcl1_integral", "wcl2_integral", "rho_hat"], rows)
    return ["mixing.csv", "mixing_summary.csv"]


def _cmd_invert(cfg, out):
    from .hypotheses import build_f0, build_family_d1
    from .inverse_drift import DensitySpec, audit_proposition_conditions, build_drift, roundtrip_invariance
    from .simulate import SimConfig

    a, g = float(cfg["a"]), float(cfg["gamma"])
    if cfg["levy"] == "none":
        lev = LevyMeasure.none(1)
    else:
        lev = LevyMeasure.gaussian_compound_poisson(float(cfg["levy_rate"]), float(cfg["levy_scale"]),
                                                    eps0=float(cfg["levy_eps0"]))
    if cfg["density"] == "gaussian":
        f = DensitySpec.gaussian(float(cfg["var"]))
        audit = False
    else:
        base = build_f0(float(cfg["eta"]))
        if lev.c4 > 0 and not check_c4_condition(a, g, lev.c4):
            raise ValidationError([f"jump moment c4 = {lev.c4:.4g} violates c4 < a^2/(896 gamma^2)"])
        f = base.density_spec()
        if cfg["density"] == "f1":
            f = build_family_d1(base, None, 0.0, float(cfg["H"]), float(cfg["M_T"])).density_spec_f1()
        audit = cfg["density"] == "f0"
    files = []
    if f.constants:
        rep = audit_proposition_conditions(f, a, g, lev)
        _write_rows(os.path.join(out, "conditions.csv"), ["condition", "passed", "value", "detail"],
                    [[c.name, int(c.passed), float(c.value), c.detail] for c in rep.checks])
        _write_rows(os.path.join(out, "constants.csv"), ["name", "value"],
                    [[k, float(v)] for k, v in rep.constants.items()])
        files += ["conditions.csv", "constants.csv"]
    drift = build_drift(f, a, g, lev, _grid(cfg["grid"]), audit=audit)
    drift.to_csv(os.path.join(out, "drift.csv"))
    files.append("drift.csv")
    if cfg.get("roundtrip_T"):
        sc = SimConfig(T=float(cfg["roundtrip_T"]), dt=0.01, seed=cfg["seed"])
        rt = roundtrip_invariance(f, drift, a, g, lev, sc, n_rep=int(cfg["roundtrip_reps"]), workers=cfg["workers"])
        _write_rows(os.path.join(out, "roundtrip.csv"), ["x", "target", "mean_estimate", "se"],
                    [[float(x), float(t), float(m), float(s)] for x, t, m, s in zip(rt.points, rt.target, rt.mean_estimate, rt.se)])
        files.append("roundtrip.csv")
    return files


def _cmd_lower_bound(cfg, out):
    from .hypotheses import build_f0, build_family_d2, kl_table, amplitude_cap

    base = build_f0(float(cfg["eta"]), 2, np.eye(2))
    alpha = float(cfg["alpha"])
    v = amplitude_cap(base, alpha) * math.sqrt(float(cfg["v_fraction"]))
    lev = (LevyMeasure.none(2) if cfg["levy"] == "none" else
           LevyMeasure.gaussian_compound_poisson(float(cfg["levy_rate"]), float(cfg["levy_scale"]), dim=2))
    files, summary = [], []
    for T in _floats(cfg["T_grid"]):
        H = (math.log(T) / T) ** alpha
        fam = build_family_d2(base, None, H, H, v, T)
        reps = kl_table(fam, np.eye(2), np.eye(2), lev, workers=cfg["workers"])
        name = f"kl_T{int(T)}.csv"
        _write_rows(os.path.join(out, name),
                    ["j1", "j2", "entropy_term", "girsanov_term", "prop_bound", "ratio_to_log_JT"],
                    [[r.j[0], r.j[1], r.entropy, r.girsanov, r.prop_bound, r.ratio_to_log_JT] for r in reps])
        files.append(name)
        summary.append([float(T), float(H), fam.size, float(v), float(np.mean([r.ratio_to_log_JT for r in reps])),
                        int(all(r.girsanov_ok for r in reps))])
    _write_rows(os.path.join(out, "kl_summary.csv"),
                ["T", "H", "J_T_size", "v", "mean_ratio_to_log_JT", "girsanov_within_bound"], summary)
    return files + ["kl_summary.csv"]


HANDLERS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "rate": _cmd_rate,
    "clt": _cmd_clt,
    "mixing": _cmd_mixing,
    "invert-drift": _cmd_invert,
    "lower-bound": _cmd_lower_bound,
}


def _error(kind: str, errors, code: int) -> int:
    sys.stderr.write(json.dumps({"status": "error", "kind": kind, "errors": list(errors)}) + "\n")
    return code


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def run(cfg: dict) -> list:
    """Execute a resolved config; stage outputs and move them into place."""
    out = cfg["output_dir"]
    parent = os.path.dirname(os.path.abspath(out))
    os.makedirs(parent, exist_ok=True)
    t0 = time.time()
    stage = tempfile.mkdtemp(prefix=".jumpkde-", dir=parent)
    try:
        files = HANDLERS[cfg["command"]](cfg, stage)
        manifest = {
            "command": cfg["command"],
            "config": {k: _jsonable(v) for k, v in sorted(cfg.items())},
            "version": __version__,
            "outputs": files,
            "wall_time_s": round(time.time() - t0, 3),
        }
        with open(os.path.join(stage, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        os.makedirs(out, exist_ok=True)
        for name in files + ["manifest.json"]:
            os.replace(os.path.join(stage, name), os.path.join(out, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return files


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ValidationError as exc:
        return _error("validation", exc.errors, EXIT_VALIDATION)
    try:
        run(cfg)
    except ValidationError as exc:
        return _error("validation", exc.errors, EXIT_VALIDATION)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error("numeric", [str(exc)], EXIT_NUMERIC)
    except OSError as exc:
        return _error("io", [str(exc)], EXIT_IO)
    except ValueError as exc:
        return _error("validation", [str(exc)], EXIT_VALIDATION)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: one subcommand per experiment, CSV/JSON out, JSON manifest alongside.

Examples
--------
    hardytime xmu --out results/xmu.csv
    hardytime run --config configs/flow.json
    hardytime flow --config configs/flow.json --a 3 --tmax 40
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import platform
import sys
from importlib import resources
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .contraction import DEFAULT_RANK_TOL, char_intertwine_residual, spectrum_gap
from .cauchyflow import norm_flow_curves
from .fock import (Martingale, annihilation, annihilation_discrepancy, creation,
                   creation_intertwining_residual, exp_vector, make_fock, random_contraction,
                   second_quantization, toy_quasi_affinity)
from .grid import make_grid
from .qsde import ProcessSpec, integrate, intertwining_diagnostics, rewrite_hat
from .quasiaffine import build_omega_b, build_omega_f, intertwining_residual
from .timeobs import build_time_observable, gaussian_bump, spectral_flow_experiment, xmu_program

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

EXPERIMENTS = ("spectrum", "flow", "normflow", "xmu", "intertwine",
               "characteristic", "fock-check", "qsde")

DEFAULT_GRIDS = {
    "spectrum": (1024, 100.0),
    "flow": (1024, 100.0),
    "normflow": (4096, 100.0),
    "xmu": (4096, 200.0),
    "intertwine": (2048, 100.0),
    "characteristic": (256, 50.0),
}

DEFAULT_PARAMS = {
    "spectrum": {"direction": "forward"},
    "flow": {"a": 2.0, "tmax": 50.0, "steps": 100, "center": 20.0, "width": 2.0,
             "frequency": 0.0, "threshold": 0.3, "direction": "forward"},
    "normflow": {"tmin": 0.0, "tmax": 50.0, "steps": 10, "center": 20.0, "width": 0.5},
    "xmu": {"mu": [[0.0, -1.0], [50.0, -1.0], [-50.0, -1.0]], "periodized": True},
    "intertwine": {"tmax": 25.0, "steps": 10, "center": 30.0, "width": 2.0,
                   "direction": "forward"},
    "characteristic": {"lambdas": [[0.0, 0.0], [0.3, 0.2], [0.0, -0.5]],
                       "rank_tol": DEFAULT_RANK_TOL},
    "fock-check": {"base_dim": 4, "n_max": 4, "scale": 0.5},
    "qsde": {"base_dim": 3, "n_max": 3, "tmax": 12.0, "steps": 200,
             "L": [[0.0, 0.5], [0.2, 0.0]], "S": [[0.0, 1.0], [1.0, 0.0]],
             "H": [[1.0, 0.3], [0.3, -0.5]], "generator": None, "direction": "forward"},
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = errors
        super().__init__("; ".join(e["message"] for e in errors))


def load_schema() -> dict:
    text = resources.files("hardytime").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError([
            {"path": "/".join(str(p) for p in e.absolute_path), "message": e.message}
            for e in errors
        ])


def resolve_config(cfg: dict) -> dict:
    """Fill defaults so the manifest echoes every parameter actually used."""
    cfg = copy.deepcopy(cfg)
    name = cfg["experiment"]
    params = copy.deepcopy(DEFAULT_PARAMS[name])
    params.update(cfg.get("params", {}))
    cfg["params"] = params
    if name in DEFAULT_GRIDS:
        n, L = DEFAULT_GRIDS[name]
        grid = {"n_points": n, "halfwidth": L}
        grid.update(cfg.get("grid", {}))
        cfg["grid"] = grid
    else:
        cfg.pop("grid", None)
    cfg.setdefault("format", "csv")
    cfg.setdefault("seed", 0)
    return cfg


def _complex(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x)


def _matrix(rows) -> np.ndarray:
    return np.array([[_complex(x) for x in row] for row in rows], dtype=complex)


class Check(dict):
    """One invariant: measured value, tolerance and verdict."""

    def __init__(self, value, tol, passed=None, note=None):
        value = float(value)
        super().__init__(value=value, tol=float(tol),
                         passed=bool(value <= tol if passed is None else passed))
        if note:
            self["note"] = note


def _grid(cfg):
    return make_grid(cfg["grid"]["n_points"], cfg["grid"]["halfwidth"])


def run_spectrum(cfg, rng):
    spec = _grid(cfg)
    build = build_omega_f if cfg["params"]["direction"] == "forward" else build_omega_b
    omega = build(spec)
    obs = build_time_observable(omega, direction=cfg["params"]["direction"])
    rows = [[k, lam, t] for k, (lam, t) in enumerate(zip(obs.eigvals, obs.times))]
    checks = {
        "eigenvalues_in_unit_interval": Check(
            max(obs.eigvals[0] - 1.0, -obs.eigvals[-1], 0.0), 1e-8),
        "nonzero_spectrum_equality": Check(spectrum_gap(omega), 1e-8),
    }
    return ["index", "eigenvalue", "time"], rows, checks


def run_flow(cfg, rng):
    p = cfg["params"]
    spec = _grid(cfg)
    backward = p["direction"] == "backward"
    omega = (build_omega_b if backward else build_omega_f)(spec)
    obs = build_time_observable(omega, direction=p["direction"])
    times = np.linspace(0.0, -p["tmax"] if backward else p["tmax"], p["steps"] + 1)
    g = gaussian_bump(spec, p["center"], p["width"], p["frequency"])
    curve = spectral_flow_experiment(obs, g, p["a"], times, threshold=p["threshold"])
    rows = [[t, lo, hi] for t, lo, hi in zip(curve.times, curve.mass_low, curve.mass_high)]
    checks = {
        "mass_conservation": Check(np.max(np.abs(curve.mass_low ** 2 + curve.mass_high ** 2 - 1)), 1e-10),
        "no_rise_above_start": Check(max(curve.max_rise, 0.0), 1e-10),
        "threshold_crossed": Check(0.0 if curve.passed else 1.0, 0.5,
                                   note=f"first crossing t={curve.crossing_time}"),
    }
    return ["t", "mass_low", "mass_high"], rows, checks


def run_normflow(cfg, rng):
    p = cfg["params"]
    spec = _grid(cfg)
    psi = gaussian_bump(spec, p["center"], p["width"])
    times = np.linspace(p["tmin"], p["tmax"], p["steps"] + 1)
    table = norm_flow_curves(psi, times)
    rows = [list(r) for r in zip(table.times, table.n_plus, table.n_minus, table.n_plus_toeplitz)]
    fwd = table.times >= 0
    route = float(np.max(np.abs(table.n_plus - table.n_plus_toeplitz)[fwd])) if fwd.any() else 0.0
    checks = {
        "pythagoras": Check(table.pythagoras_defect, 1e-12),
        "monotone": Check(0.0 if table.monotone() else 1.0, 0.5),
        "toeplitz_route_forward": Check(route, 1e-10),
    }
    return ["t", "n_plus", "n_minus", "n_plus_toeplitz"], rows, checks


def run_xmu(cfg, rng):
    p = cfg["params"]
    spec = _grid(cfg)
    table = xmu_program([_complex(m) for m in p["mu"]], spec, p["periodized"])
    rows = [[r.mu, r.norm_x_sq, r.norm_psi_sq, r.ratio] for r in table]
    checks = {}
    for r in table:
        if r.mu == -1j:
            checks["norm_x_sq_pi"] = Check(abs(r.norm_x_sq / np.pi - 1), 0.02)
            checks["norm_psi_sq_half_pi"] = Check(abs(r.norm_psi_sq / (np.pi / 2) - 1), 0.02)
    return ["mu", "norm_x_sq", "norm_psi_sq", "ratio"], rows, checks


def run_intertwine(cfg, rng):
    p = cfg["params"]
    spec = _grid(cfg)
    g = gaussian_bump(spec, p["center"], p["width"])
    sign = -1.0 if p["direction"] == "backward" else 1.0
    k_max = int(np.floor(p["tmax"] / spec.bin_step))
    ks = np.unique(np.rint(np.linspace(1, max(k_max, 1), p["steps"])).astype(int))
    rows = []
    for k in ks:
        t = sign * k * spec.bin_step
        r = intertwining_residual(g, t, p["direction"])
        rows.append([t, r.res_semigroup, r.res_wrongside])
    res = np.array([r[1] for r in rows])
    wrong = np.array([r[2] for r in rows])
    checks = {
        "semigroup_residual": Check(res.max(), 1e-6),
        "wrong_side_ratio": Check(np.min(wrong / np.maximum(res, 1e-300)), 1e3,
                                  passed=bool(np.all(wrong >= 1e3 * np.maximum(res, 1e-6)))),
    }
    return ["t", "res_semigroup", "res_wrongside"], rows, checks


def run_characteristic(cfg, rng):
    p = cfg["params"]
    omega = build_omega_f(_grid(cfg))
    rows = []
    worst = 0.0
    inclusion = 0.0
    for lam in p["lambdas"]:
        lam = _complex(lam)
        r = char_intertwine_residual(omega, lam, p["rank_tol"])
        rows.append([lam, r.res_star, r.res_plain, r.inclusion, r.rank_phys, r.rank_hardy])
        worst = max(worst, r.res_star, r.res_plain)
        inclusion = max(inclusion, r.inclusion)
    checks = {
        "intertwining": Check(worst, 1e-7),
        "defect_inclusion": Check(inclusion, 1e-6),
    }
    return ["lambda", "res_star", "res_plain", "inclusion", "rank_phys", "rank_hardy"], rows, checks


def _random_vec(rng, d, scale):
    return scale * (rng.normal(size=d) + 1j * rng.normal(size=d)) / np.sqrt(2 * d)


def run_fock_check(cfg, rng):
    p = cfg["params"]
    d, n_max, scale = p["base_dim"], p["n_max"], p["scale"]
    fock = make_fock(d, n_max)
    u, v = _random_vec(rng, d, scale * np.sqrt(d)), _random_vec(rng, d, scale * np.sqrt(d))
    C = random_contraction(d, int(rng.integers(2 ** 31)))
    below = fock.below_top()
    w = exp_vector(fock, v).coeffs * below
    a, ad = annihilation(fock, u).matrix, creation(fock, v).matrix
    ccr = np.linalg.norm((a @ ad - ad @ a) @ w - np.vdot(u, v) * w)
    s = np.vdot(u, v)
    series = sum(s ** n / np.prod(np.arange(1, n + 1, dtype=float)) for n in range(n_max + 1))
    gram = abs(exp_vector(fock, u).inner(exp_vector(fock, v)) - series)
    gamma = (second_quantization(fock, C) @ exp_vector(fock, u) - exp_vector(fock, C @ u)).norm()
    cre = creation_intertwining_residual(fock, C, u, v)
    measured, predicted = annihilation_discrepancy(fock, C, u, v)
    ann = float(np.linalg.norm(measured - predicted))
    values = {"ccr_below_top": ccr, "exp_vector_gram": gram, "gamma_exp_vector": gamma,
              "creation_intertwining": cre, "annihilation_discrepancy": ann}
    checks = {k: Check(val, 1e-12) for k, val in values.items()}
    rows = [[k, val, 1e-12] for k, val in values.items()]
    return ["check", "value", "tol"], rows, checks


def run_qsde(cfg, rng):
    p = cfg["params"]
    d = p["base_dim"]
    omega = toy_quasi_affinity(d, int(rng.integers(2 ** 31)))
    obs = build_time_observable(omega, direction=p["direction"])
    gen = p["generator"]
    v = np.ones(d) / np.sqrt(d) if gen is None else np.array([_complex(x) for x in gen])
    L, S, H = _matrix(p["L"]), _matrix(p["S"]), _matrix(p["H"])
    fock = make_fock(d, p["n_max"])
    grid = np.linspace(0.0, p["tmax"], p["steps"] + 1)
    phys_spec = ProcessSpec(L, S, H, np.eye(d), Martingale(v, obs), fock, grid)
    hat_spec = rewrite_hat(phys_spec, omega)
    phys, hat = integrate(phys_spec), integrate(hat_spec)
    n = L.shape[0]
    h = np.zeros(n)
    h[0] = 1.0
    u = _random_vec(rng, d, 0.5)
    u2 = _random_vec(rng, d, 0.5)
    report = intertwining_diagnostics(phys, hat, omega, [(h, u, h, u2)])
    rows = [[r.t, phys.drift[k], hat.drift[k], r.bracket_phys, r.bracket_hat, r.bracket_transport,
             r.m_phys, r.m_hat] for k, r in enumerate(report.rows)]
    checks = {
        "bracket_clock": Check(report.bracket_residual, 1e-10),
        "initial_values": Check(report.initial_residual, 1e-12),
        "substitution": Check(report.substitution_residual, 1e-10),
    }
    cols = ["t", "drift_phys", "drift_hat", "bracket_phys", "bracket_hat", "bracket_transport",
            "m_phys", "m_hat"]
    return cols, rows, checks


RUNNERS = {
    "spectrum": run_spectrum,
    "flow": run_flow,
    "normflow": run_normflow,
    "xmu": run_xmu,
    "intertwine": run_intertwine,
    "characteristic": run_characteristic,
    "fock-check": run_fock_check,
    "qsde": run_qsde,
}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _flatten(columns, rows):
    """Split complex columns into ``_re``/``_im`` pairs."""
    is_complex = [any(isinstance(r[i], (complex, np.complexfloating)) for r in rows)
                  for i in range(len(columns))]
    header = []
    for name, c in zip(columns, is_complex):
        header.extend([f"{name}_re", f"{name}_im"] if c else [name])
    out = []
    for r in rows:
        flat = []
        for x, c in zip(r, is_complex):
            flat.extend([complex(x).real, complex(x).imag] if c else [x])
        out.append(flat)
    return header, out


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str):
        return x
    x = float(x)
    return x if np.isfinite(x) else _fmt(x)


def render(columns, rows, fmt: str) -> str:
    header, flat = _flatten(columns, rows)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in flat:
            writer.writerow([_fmt(x) for x in r])
        return buf.getvalue()
    records = [{k: _json_value(x) for k, x in zip(header, r)} for r in flat]
    return json.dumps({"columns": header, "rows": records}, indent=2) + "\n"


def _versions() -> dict:
    out = {"hardytime": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "jsonschema"):
        try:
            out[pkg] = version(pkg)
        except PackageNotFoundError:
            out[pkg] = None
    return out


def run(cfg: dict, out: str | None = None) -> int:
    """Validate, execute and write outputs; returns the process exit code."""
    try:
        validate_config(cfg)
    except ConfigError as err:
        json.dump({"status": "config_error", "errors": err.errors}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    cfg = resolve_config(cfg)
    fmt = cfg["format"]
    out_path = Path(out or cfg.get("out") or f"{cfg['experiment']}.{fmt}")
    rng = np.random.default_rng(cfg["seed"])
    try:
        columns, rows, checks = RUNNERS[cfg["experiment"]](cfg, rng)
    except ValueError as err:
        json.dump({"status": "config_error", "errors": [{"path": "params", "message": str(err)}]},
                  sys.stderr, indent=2)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    text = render(columns, rows, fmt)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(text)
    passed = all(c["passed"] for c in checks.values())
    manifest = {
        "config": cfg,
        "versions": _versions(),
        "output": {"path": out_path.name, "format": fmt,
                   "sha256": hashlib.sha256(text.encode()).hexdigest(), "rows": len(rows)},
        "invariants": checks,
        "status": "ok" if passed else "invariant_failure",
    }
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name, c in checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}: {c['value']:.3e} (tol {c['tol']:.1e})")
    print(f"wrote {out_path} and {manifest_path.name}")
    return EXIT_OK if passed else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardytime", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", help="output file (manifest goes next to it)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int, dest="n_points", help="grid size N")
    common.add_argument("--halfwidth", type=float, help="grid half-width L")
    common.add_argument("--a", type=float, help="spectral threshold a (flow)")
    common.add_argument("--tmax", type=float)
    common.add_argument("--steps", type=int)
    sub.add_parser("run", parents=[common], help="run the experiment named in --config")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def _config_from_args(args) -> dict:
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError([{"path": str(args.config), "message": str(err)}])
        if not isinstance(cfg, dict):
            raise ConfigError([{"path": str(args.config), "message": "config must be an object"}])
    if args.command != "run":
        if cfg.get("experiment", args.command) != args.command:
            raise ConfigError([{"path": "experiment",
                                "message": f"config is for {cfg['experiment']!r}, not {args.command!r}"}])
        cfg["experiment"] = args.command
    elif "experiment" not in cfg:
        raise ConfigError([{"path": "experiment", "message": "run needs --config with an experiment"}])
    if args.format:
        cfg["format"] = args.format
    if args.seed is not None:
        cfg["seed"] = args.seed
    for key in ("n_points", "halfwidth"):
        val = getattr(args, key)
        if val is not None:
            cfg.setdefault("grid", {})[key] = val
    for key in ("a", "tmax", "steps"):
        val = getattr(args, key)
        if val is not None:
            cfg.setdefault("params", {})[key] = val
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as err:
        json.dump({"status": "config_error", "errors": err.errors}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())

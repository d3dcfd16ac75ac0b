"""Batch front end: config ingestion, run orchestration, report emission.

Three subcommands drive the three experiment kinds:

    gpwave solve --config run.json --out results/
    gpwave iso   --config run.json --out results/
    gpwave scan  --config run.json --out results/

Configuration is a single JSON document; the flags --out, --seed,
--workers, --no-timestamp and the numeric overrides --k/--delta/--sigma/
--samples take precedence over file fields. Unknown config fields are
rejected. Every output file embeds the fully resolved configuration; a
generation timestamp is included unless suppressed, so identical config
plus seed reproduces byte-identical files.

Exit codes: 0 success, 1 usage/config error, 2 mathematical failure
(no admissible point, non-convergence, diverging expansion).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ConfigError, GPWaveError
from .gpfix import assemble_solution, config_for_direction, iterate, Workspace
from .isosurf import IsoConfig, MeasureEstimate, estimate_measure, fibonacci_sphere, trace_surface
from .lattice import build_basis, build_model, gamma_set, split_k
from .nonres import check_nonresonance
from .trigpoly import TrigPolynomial

_FIELDS = {
    "command": str, "potential": (str, type(None)), "k": float, "delta": float,
    "sigma": float, "A": dict, "nu": list, "t": list, "j_star": list,
    "j_max": float, "r0": float, "coeff": float, "nodes": int, "r_max": int,
    "fp_tol": (float, type(None)), "cutoff": (float, type(None)),
    "max_iters": int, "samples": int, "directions": int, "attempts": int,
    "seed": int, "out_dir": str, "workers": int, "timestamp": bool,
    "lambda": float, "guard": float, "fit_const": float,
}

_DEFAULTS = {
    "potential": None, "delta": 1.0 / 300.0, "sigma": 0.0,
    "A": {"modulus": 1.0, "phase": 0.0}, "nu": None, "t": None, "j_star": None,
    "j_max": 4.0, "r0": 2.0, "coeff": 1.0, "nodes": 64, "r_max": 12,
    "fp_tol": None, "cutoff": None, "max_iters": 50, "samples": 500,
    "directions": 200, "attempts": 12, "seed": 0, "out_dir": ".",
    "workers": 1, "timestamp": True, "lambda": None, "guard": 0.1,
    "fit_const": 10.0,
}


@dataclass
class RunConfig:
    command: str
    raw: dict

    def __getitem__(self, key):
        return self.raw[key]

    def amplitude(self) -> complex:
        a = self.raw["A"]
        return complex(a["modulus"] * np.cos(a["phase"]),
                       a["modulus"] * np.sin(a["phase"]))

    def resolved(self) -> dict:
        out = dict(sorted(self.raw.items()))
        out["command"] = self.command
        return out


def load_config(path: str, command: str, overrides: dict) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    merged = dict(_DEFAULTS)
    merged.update(data)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    merged.pop("command", None)
    if "k" not in merged or merged.get("k") is None:
        if merged.get("lambda") is not None:
            merged["k"] = float(np.sqrt(merged["lambda"]))
        else:
            raise ConfigError("config must provide k (or lambda)")
    if merged.get("lambda") is None:
        merged["lambda"] = float(merged["k"]) ** 2
    for key in ("k", "delta", "sigma", "j_max", "r0", "coeff", "lambda",
                "guard", "fit_const"):
        merged[key] = float(merged[key])
    for key in ("nodes", "r_max", "max_iters", "samples", "directions",
                "attempts", "seed", "workers"):
        merged[key] = int(merged[key])
    return RunConfig(command=command, raw=merged)


def load_potential(cfg: RunConfig) -> TrigPolynomial:
    path = cfg["potential"]
    if path is None:
        return TrigPolynomial.zero()
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read potential {path}: {exc}") from exc
    v = TrigPolynomial.from_json_obj(obj, require_real=True, require_mean_free=True)
    if v.support_radius >= cfg["r0"]:
        raise ConfigError("potential support must lie strictly inside the R0 ball")
    return v


def _timestamp_line(cfg: RunConfig) -> str | None:
    if not cfg["timestamp"]:
        return None
    return datetime.now(timezone.utc).isoformat()


def _write_json(path: Path, payload: dict, cfg: RunConfig) -> None:
    doc = {"config": cfg.resolved()}
    stamp = _timestamp_line(cfg)
    if stamp:
        doc["generated_at"] = stamp
    doc.update(payload)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list], cfg: RunConfig) -> None:
    lines = [f"# config: {json.dumps(cfg.resolved(), sort_keys=True)}"]
    stamp = _timestamp_line(cfg)
    if stamp:
        lines.append(f"# generated: {stamp}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _direction(cfg: RunConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg["nu"] is not None:
        nu = np.asarray([float(x) for x in cfg["nu"]], dtype=float)
        n = np.linalg.norm(nu)
        if n == 0:
            raise ConfigError("direction nu must be nonzero")
        return nu / n
    if cfg["t"] is not None:
        if cfg["j_star"] is None:
            raise ConfigError("t-mode needs j_star as well")
        kvec = np.asarray([float(x) for x in cfg["t"]]) + \
            np.asarray([float(x) for x in cfg["j_star"]])
        return kvec / np.linalg.norm(kvec)
    vec = rng.standard_normal(3)
    return vec / np.linalg.norm(vec)


def run_solve(cfg: RunConfig) -> int:
    v = load_potential(cfg)
    rng = np.random.default_rng(cfg["seed"])
    nu = _direction(cfg, rng)
    run, report = config_for_direction(
        v, cfg["sigma"], cfg.amplitude(), nu, cfg["k"], cfg["delta"],
        j_max=cfg["j_max"], r0=cfg["r0"], coeff=cfg["coeff"],
        nodes=cfg["nodes"], r_max=cfg["r_max"], max_iters=cfg["max_iters"],
        fp_tol=cfg["fp_tol"], cutoff=cfg["cutoff"], attempts=cfg["attempts"],
        guard=cfg["guard"], fit_const=cfg["fit_const"], seed=cfg["seed"])
    ws = Workspace(run)
    fp = iterate(run, ws)
    sol = assemble_solution(fp, run, ws)

    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "solution.json", {
        "solution": sol.to_json_obj(),
        "fixed_point": fp.to_json_obj(),
        "j_star": [int(x) for x in run.j_star],
        "t": list(run.t.t),
        "k_effective": run.k,
    }, cfg)
    rows = fp.csv_rows()
    _write_csv(out / "steps.csv", rows[0], rows[1:], cfg)
    _write_json(out / "nonres.json", {"report": report.to_json_obj()}, cfg)
    return 0


def run_isoenergetic(cfg: RunConfig) -> int:
    v = load_potential(cfg)
    if cfg["samples"] < 100:
        raise ConfigError("samples must be >= 100")
    iso = IsoConfig(v=v, sigma=cfg["sigma"], delta=cfg["delta"],
                    j_max=cfg["j_max"], r0=cfg["r0"], coeff=cfg["coeff"],
                    nodes=cfg["nodes"], r_max=cfg["r_max"],
                    max_iters=cfg["max_iters"], fp_tol=cfg["fp_tol"],
                    cutoff=cfg["cutoff"], attempts=cfg["attempts"],
                    guard=cfg["guard"], fit_const=cfg["fit_const"],
                    workers=cfg["workers"])
    lam = cfg["lambda"]
    a = cfg.amplitude()
    surface = trace_surface(lam, a, fibonacci_sphere(cfg["directions"]), iso)
    measure = estimate_measure(lam, a, cfg["samples"], cfg["seed"], iso)

    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    header = ["nu_x", "nu_y", "nu_z", "kappa", "h", "grad_h_1", "grad_h_2",
              "passed", "newton_residual"]
    _write_csv(out / "surface.csv", header, [s.csv_row() for s in surface], cfg)
    _write_json(out / "measure.json", {"measure": measure.to_json_obj()}, cfg)
    return 0


def run_nonres_scan(cfg: RunConfig) -> int:
    v = load_potential(cfg)
    basis = build_basis(cfg["j_max"])
    gamma = gamma_set(v, cfg["r0"])
    rows = []
    for nu in fibonacci_sphere(cfg["samples"]):
        kvec = cfg["k"] * nu
        j_star, t = split_k(kvec)
        center = tuple(int(x) for x in j_star)
        k_eff = float(np.linalg.norm(kvec))
        try:
            model = build_model(v, gamma, k_eff, cfg["r0"], basis,
                                cfg["coeff"], center)
            rep = check_nonresonance(v, t, k_eff, cfg["delta"], model, basis,
                                     nodes=cfg["nodes"], guard=cfg["guard"],
                                     fit_const=cfg["fit_const"])
            rows.append([nu[0], nu[1], nu[2], rep.passed, rep.margin_min()])
        except ConfigError:
            rows.append([nu[0], nu[1], nu[2], False, float("nan")])
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "scan.csv", ["nu_x", "nu_y", "nu_z", "passed", "margin_min"],
               rows, cfg)
    return 0


_RUNNERS = {"solve": run_solve, "iso": run_isoenergetic, "scan": run_nonres_scan}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpwave",
        description="Spectral solver for quasi-periodic states of the cubic "
                    "Schroedinger equation with periodic potential")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [("solve", "run one fixed-point solve"),
                      ("iso", "trace an isoenergetic surface and estimate its measure"),
                      ("scan", "scan non-resonance margins over a direction grid")]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit generation timestamps for bit-exact diffs")
        p.add_argument("--k", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--sigma", type=float, default=None)
        p.add_argument("--samples", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"out_dir": args.out, "seed": args.seed, "workers": args.workers,
                 "k": args.k, "delta": args.delta, "sigma": args.sigma,
                 "samples": args.samples}
    if args.no_timestamp:
        overrides["timestamp"] = False
    try:
        cfg = load_config(args.config, args.command, overrides)
        return _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GPWaveError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

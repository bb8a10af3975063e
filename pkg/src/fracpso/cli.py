"""Command-line front end.

Subcommands::

    fracpso simulate  --target paper --input step --out y.csv
    fracpso identify  --config run.json --out results/
    fracpso eval      --target paper --coeffs 0.1772,0.7329,0.4463,1.0265
    fracpso weights   --order 2.2 --count 5

Exit codes: 0 success, 2 configuration/parse error, 3 numerical/simulation error.
Nothing is written unless the whole command succeeds.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .gl_core import FULL, FractionalTF, Signal, SimulationError, gl_weights, simulate_fractional
from .identify import (
    EXCITATIONS,
    PAPER_TARGET,
    ExperimentConfig,
    IdentificationReport,
    ObservationSet,
    derive_template,
    excitation,
    fitness_parts,
    generate_observations,
    identify_observations,
    total,
)
from .lti_sim import PolynomialTF, simulate_integer
from .swarm import SwarmConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- file I/O


def format_float(v: float) -> str:
    return f"{float(v):.17g}"


def render_csv(header: Sequence[str], columns: Sequence[Sequence[float]]) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def write_atomic(files: dict[Path, str]) -> None:
    """Write every file to a temp sibling first, then rename them all into place."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def emit(out: Optional[str], text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic({Path(out): text})


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip().split(",") for line in fh if line.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ConfigError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
    try:
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    except ValueError as e:
        raise ConfigError(f"{path}: non-numeric value ({e})") from e
    return [h.strip() for h in header], data


def read_observations(path: str, kind: str = "step") -> ObservationSet:
    """Load observed outputs on a uniform grid starting at t = 0.

    Accepted layouts: ``t,y`` and ``t,observed[,model]`` (a single excitation,
    given by ``kind``), or ``t,step[,ramp]`` with one column per excitation.
    """
    header, data = read_csv(path)
    if not header or header[0] != "t":
        raise ConfigError(f"{path}:1: first column must be 't'")
    if data.shape[0] < 2:
        raise ConfigError(f"{path}: need at least 2 samples")
    t = data[:, 0]
    dt = t[1] - t[0]
    if t[0] != 0 or not dt > 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ConfigError(f"{path}: time column must be uniform and start at 0")
    cols = dict(zip(header[1:], data[:, 1:].T))
    if any(k in cols for k in EXCITATIONS):
        outputs = {k: cols[k] for k in EXCITATIONS if k in cols}
    elif "y" in cols:
        outputs = {kind: cols["y"]}
    elif "observed" in cols:
        outputs = {kind: cols["observed"]}
    else:
        raise ConfigError(f"{path}:1: no observation column (y, observed, step or ramp)")
    try:
        return ObservationSet.from_arrays(float(dt), outputs)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e


# ------------------------------------------------------------ run config


@dataclass
class RunConfig:
    """File form of an experiment. JSON schema (every key optional)::

        {
          "target": [[0.8, 2.2], [0.5, 0.9], [1.0, 0.0]],   # [coeff, order] pairs
          "dt": 0.05, "t_end": 10.0, "memory": "full",
          "inputs": ["step", "ramp"], "penalty_fitness": 1e9,
          "swarm": {"pop": 20, "iters": 200, "c1": 1.4, "c2": 1.4,
                    "omega_start": 0.9, "omega_end": 0.4, "lo": 0.0, "hi": 2.0,
                    "seed": 0, "stop_fitness": 1e-8, "workers": 1},
          "output": {"dir": "results"}
        }
    """

    target: Optional[FractionalTF] = None
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    out_dir: Optional[str] = None


_SWARM_KEYS = {
    "pop": "pop",
    "iters": "max_iters",
    "c1": "c1",
    "c2": "c2",
    "omega_start": "omega_start",
    "omega_end": "omega_end",
    "lo": "lo",
    "hi": "hi",
    "seed": "seed",
    "stop_fitness": "stop_fitness",
    "workers": "workers",
}
_TOP_KEYS = {"target", "dt", "t_end", "memory", "inputs", "penalty_fitness", "swarm", "output", "substeps", "observer"}


def parse_pairs(pairs, where: str) -> FractionalTF:
    try:
        return FractionalTF.from_pairs([(float(c), float(o)) for c, o in pairs])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: invalid target ({e})") from e


def parse_target_expr(expr: str) -> FractionalTF:
    """``paper`` or comma-separated ``coeff:order`` terms, e.g. ``0.8:2.2,0.5:0.9,1:0``."""
    if expr.strip().lower() == "paper":
        return PAPER_TARGET
    pairs = []
    for term in expr.split(","):
        bits = term.split(":")
        if len(bits) != 2:
            raise ConfigError(f"--target: term {term!r} is not coeff:order")
        pairs.append(bits)
    return parse_pairs(pairs, "--target")


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")

    target = parse_pairs(raw["target"], f"{path}: field 'target'") if "target" in raw else None
    exp = {}
    for key, name in [("dt", "dt"), ("t_end", "t_end"), ("penalty_fitness", "penalty_fitness"), ("substeps", "substeps"), ("observer", "observer")]:
        if key in raw:
            exp[name] = raw[key]
    if "memory" in raw:
        exp["memory_len"] = raw["memory"]
    if "inputs" in raw:
        exp["inputs"] = tuple(raw["inputs"])
    sw = {}
    swarm_raw = raw.get("swarm", {})
    if not isinstance(swarm_raw, dict):
        raise ConfigError(f"{path}: field 'swarm' must be an object")
    for key, value in swarm_raw.items():
        if key not in _SWARM_KEYS:
            raise ConfigError(f"{path}: unknown field 'swarm.{key}'")
        sw[_SWARM_KEYS[key]] = value
    try:
        experiment = ExperimentConfig(swarm=SwarmConfig(**sw), **exp)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e
    out_dir = raw.get("output", {}).get("dir")
    return RunConfig(target, experiment, out_dir)


def add_target_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", help="'paper' or coeff:order terms, e.g. 0.8:2.2,0.5:0.9,1:0")
    p.add_argument("--coeff", type=float, action="append", help="term coefficient (pair with --order)")
    p.add_argument("--order", type=float, action="append", help="term order (pair with --coeff)")


def add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, help="sampling time in seconds (default 0.05)")
    p.add_argument("--t-end", type=float, help="horizon in seconds (default 10)")
    p.add_argument("--memory", help="GL memory length in seconds, or 'full'")


def add_swarm_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int, help="maximum swarm iterations")
    p.add_argument("--particles", type=int, help="population size")
    p.add_argument("--workers", type=int, help="threads for fitness evaluation")


def resolve(args) -> RunConfig:
    """Config file (if any) overridden by flags."""
    rc = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()

    if args.target:
        rc.target = parse_target_expr(args.target)
    if args.coeff or args.order:
        if len(args.coeff or []) != len(args.order or []):
            raise ConfigError("--coeff and --order must be given the same number of times")
        rc.target = parse_pairs(list(zip(args.coeff, args.order)), "--coeff/--order")

    exp = {}
    if args.dt is not None:
        exp["dt"] = args.dt
    if args.t_end is not None:
        exp["t_end"] = args.t_end
    if args.memory is not None:
        exp["memory_len"] = FULL if args.memory == FULL else _float(args.memory, "--memory")
    sw = {}
    for flag, name in [("seed", "seed"), ("iters", "max_iters"), ("particles", "pop"), ("workers", "workers")]:
        if getattr(args, flag, None) is not None:
            sw[name] = getattr(args, flag)
    try:
        swarm = replace(rc.experiment.swarm, **sw)
        rc.experiment = replace(rc.experiment, swarm=swarm, **exp)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    if getattr(args, "out", None):
        rc.out_dir = args.out
    return rc


def _float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise ConfigError(f"{where}: not a number: {text!r}") from e


def _require_target(rc: RunConfig) -> FractionalTF:
    if rc.target is None:
        raise ConfigError("no target system: use --target, --coeff/--order or a config file")
    return rc.target


# ------------------------------------------------------------- commands


def simulate_target(tf: FractionalTF, u: Signal, exp: ExperimentConfig, scheme: str = "auto") -> Signal:
    if scheme == "rk4" or (scheme == "auto" and tf.is_integer_order()):
        if not tf.is_integer_order():
            raise ConfigError("the rk4 scheme needs integer orders")
        model = PolynomialTF.from_powers([int(o) for o in tf.orders], tf.coeffs)
        return simulate_integer(model, u, exp.leading_tol, exp.substeps, exp.overflow)
    return simulate_fractional(tf, u, exp.memory_len)


def cmd_simulate(args) -> int:
    rc = resolve(args)
    tf = _require_target(rc)
    exp = rc.experiment
    u = excitation(args.input, exp.grid)
    y = simulate_target(tf, u, exp, args.scheme)
    emit(args.out, render_csv(["t", "y"], [y.t, y.values]))
    return EXIT_OK


def _observations(args, rc: RunConfig) -> ObservationSet:
    if args.observations:
        return read_observations(args.observations, args.input)
    return generate_observations(_require_target(rc), rc.experiment)


def _powers(args, rc: RunConfig, n_coeffs: Optional[int] = None) -> list[int]:
    if getattr(args, "powers", None):
        try:
            return [int(p) for p in args.powers.split(",")]
        except ValueError as e:
            raise ConfigError(f"--powers: {e}") from e
    if rc.target is not None:
        return derive_template(rc.target)
    if n_coeffs is not None:
        return list(range(n_coeffs - 1, -1, -1))
    raise ConfigError("cannot infer template powers: give --target or --powers")


def _with_observed_grid(rc: RunConfig, obs: ObservationSet) -> ExperimentConfig:
    exp = rc.experiment
    if obs.grid == exp.grid and obs.kinds == exp.inputs:
        return exp
    try:
        return replace(exp, dt=obs.grid.dt, t_end=obs.grid.t_end, inputs=obs.kinds)
    except ValueError as e:
        raise ConfigError(f"observations: {e}") from e


def cmd_identify(args) -> int:
    rc = resolve(args)
    obs = _observations(args, rc)
    exp = _with_observed_grid(rc, obs)
    powers = _powers(args, rc)
    report = identify_observations(obs, powers, exp, target=rc.target)
    if not report.curves:
        raise SimulationError("every candidate was degenerate or unstable")

    out = Path(rc.out_dir or "results")
    files = {out / "report.json": report_json(report)}
    for kind, cols in report.curves.items():
        files[out / f"overlay_{kind}.csv"] = render_csv(
            ["t", "observed", "model"], [cols["t"], cols["observed"], cols["model"]]
        )
    write_atomic(files)

    for p in report.template_powers:
        print(f"b[s^{p}] = {format_float(report.coefficients[p])}")
    print(f"F = {format_float(report.best_f)}")
    print(f"F1 (step) = {format_float(report.f_step)}")
    print(f"F2 (ramp) = {format_float(report.f_ramp)}")
    return EXIT_OK


def report_json(report: IdentificationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"


def cmd_eval(args) -> int:
    rc = resolve(args)
    coeffs = [_float(c, "--coeffs") for c in args.coeffs.split(",")]
    obs = _observations(args, rc)
    exp = _with_observed_grid(rc, obs)
    powers = _powers(args, rc, len(coeffs))
    if len(powers) != len(coeffs):
        raise ConfigError(f"--coeffs has {len(coeffs)} values but the template has powers {powers}")
    parts = fitness_parts(coeffs, powers, obs, exp)
    if parts is None or total(parts) >= exp.penalty_fitness:
        print(f"F = {format_float(exp.penalty_fitness)}")
        print("candidate is degenerate or unstable: penalty applied")
        return EXIT_OK
    print(f"F = {format_float(total(parts))}")
    print(f"F1 (step) = {format_float(parts.get('step', 0.0))}")
    print(f"F2 (ramp) = {format_float(parts.get('ramp', 0.0))}")
    return EXIT_OK


def cmd_weights(args) -> int:
    if not math.isfinite(args.order) or args.order < 0:
        raise ConfigError(f"--order must be finite and >= 0, got {args.order}")
    if args.count < 0:
        raise ConfigError(f"--count must be >= 0, got {args.count}")
    w = gl_weights(args.order, args.count).w
    lines = ["j,w"] + [f"{j},{format_float(v)}" for j, v in enumerate(w)]
    emit(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracpso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a transfer function, write t,y CSV")
    p.add_argument("--config")
    add_target_args(p)
    add_grid_args(p)
    p.add_argument("--input", choices=EXCITATIONS, default="step")
    p.add_argument("--scheme", choices=("auto", "gl", "rk4"), default="auto",
                   help="auto: RK4 for integer orders, GL otherwise")
    p.add_argument("--out", help="output CSV (stdout if omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="fit an integer-order model by swarm search")
    p.add_argument("--config")
    add_target_args(p)
    add_grid_args(p)
    add_swarm_args(p)
    p.add_argument("--observations", help="CSV of measured outputs instead of synthetic data")
    p.add_argument("--input", choices=EXCITATIONS, default="step",
                   help="excitation of a single-column observations file")
    p.add_argument("--powers", help="template powers, e.g. 3,2,1,0 (default: derived from target)")
    p.add_argument("--out", help="output directory (default: results)")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("eval", help="print F, F1, F2 for given coefficients")
    p.add_argument("--config")
    add_target_args(p)
    add_grid_args(p)
    p.add_argument("--coeffs", required=True, help="comma-separated, highest power first")
    p.add_argument("--powers", help="template powers (default: from target, else n-1..0)")
    p.add_argument("--observations")
    p.add_argument("--input", choices=EXCITATIONS, default="step")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("weights", help="write GL weights as j,w CSV")
    p.add_argument("--order", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except SimulationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

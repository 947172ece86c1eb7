"""``floquet-vqe``: run the ensemble experiments and write CSV, SVG and a manifest.

Every option can also be given in an INI file (``--config``) under an
``[experiment]`` section, using the long option name as key.  Command-line
flags take precedence over the file.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 non-finite result.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .ansatz import PI, Regime
from .diagnostics import OtocMethod, entropy_growth, otoc_trace
from .errors import ConfigurationError, ContractViolation, NonFiniteError, ResourceLimitError
from .gradients import default_param_index, gradient_variance
from .parallel import default_workers
from .results import (ENTROPY_HEADER, OTOC_HEADER, VARIANCE_HEADER, VQE_HEADER, entropy_rows,
                      otoc_rows, read_csv, variance_rows, vqe_rows, write_csv, write_manifest)
from .vqe import XxzSpec, build_xxz, run_vqe

EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NONFINITE = 4

# regime used for "MBL-initialized" optimizer runs
VQE_MBL_REGIME = "dtc=0.9"


# ---------------------------------------------------------------- value parsing

def int_list(text: str, field: str = "value") -> list[int]:
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    if not items:
        raise ConfigurationError(f"{field}: empty list")
    try:
        return [int(t) for t in items]
    except ValueError:
        raise ConfigurationError(f"{field}: expected comma-separated integers, got {text!r}") from None


@dataclass(frozen=True)
class RegimeChoice:
    """A parsed regime token: the ansatz family plus its sampling regime."""

    token: str
    ansatz_kind: str
    regime: Regime | None

    def describe(self) -> str:
        return "HEA" if self.regime is None else self.regime.describe()


def parse_regime(token: str) -> RegimeChoice:
    """Parse ``hea``, ``pm``, ``dtc``, ``thermal`` or ``<label>=<g>`` / ``<label>=<lo>:<hi>``.

    Kick values are in units of pi.  ``pm`` and ``dtc`` alone select their
    full windows (as does ``=window``); ``thermal`` alone is the 0.5 pi point.
    """
    raw = token.strip()
    name, _, value = raw.partition("=")
    name = name.strip().lower()
    value = value.strip().lower()
    if name == "hea":
        if value:
            raise ConfigurationError(f"regimes: 'hea' takes no value, got {raw!r}")
        return RegimeChoice(raw, "hea", None)
    label = {"pm": "PM", "dtc": "DTC", "thermal": "THERMAL", "custom": "CUSTOM"}.get(name)
    if label is None:
        raise ConfigurationError(f"regimes: unknown regime {raw!r} (expected pm, thermal, dtc, custom or hea)")
    try:
        if value in ("", "window"):
            if label == "PM":
                regime = Regime.pm()
            elif label == "DTC":
                regime = Regime.dtc()
            elif label == "THERMAL" and not value:
                regime = Regime.thermal()
            else:
                raise ConfigurationError(f"regimes: {raw!r} needs an explicit kick value")
        elif ":" in value:
            lo, hi = (float(v) * PI for v in value.split(":", 1))
            regime = Regime(label, lo, hi)
        else:
            regime = Regime.fixed_kick(label, float(value) * PI)
    except ValueError as exc:
        raise ConfigurationError(f"regimes: cannot parse {raw!r}: {exc}") from None
    return RegimeChoice(raw, "mbl", regime)


def regime_list(text: str) -> list[RegimeChoice]:
    tokens = [t for t in str(text).split(",") if t.strip()]
    if not tokens:
        raise ConfigurationError("regimes: empty list")
    return [parse_regime(t) for t in tokens]


def positive_int(text, field: str) -> int:
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{field}: expected an integer, got {text!r}") from None
    if value < 1:
        raise ConfigurationError(f"{field}: must be >= 1, got {value}")
    return value


def finite_float(text, field: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{field}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{field}: must be finite")
    return value


def boolean(text, field: str) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{field}: expected a boolean, got {text!r}")


# ---------------------------------------------------------------- option tables

@dataclass(frozen=True)
class Option:
    name: str
    default: object
    help: str
    flag: bool = False


COMMON = [
    Option("seed", "0", "master seed; instance k uses the stream (seed, k)"),
    Option("workers", None, "worker processes (default: $FLOQUET_VQE_WORKERS or CPU count)"),
    Option("out", "results", "output directory"),
    Option("no-plot", False, "skip SVG plots", flag=True),
    Option("tied", False, "repeat the first block's draws in every block (strictly periodic circuit)",
           flag=True),
]

XXZ = [
    Option("xxz-j", "1.0", "XY coupling J of the XXZ chain"),
    Option("xxz-delta", "1.0", "ZZ anisotropy Delta of the XXZ chain"),
]

COMMANDS: dict[str, tuple[str, list[Option]]] = {
    "variance-vs-n": ("gradient variance against qubit count at depth = factor * N", [
        Option("regimes", "pm=0.1,thermal=0.5,dtc=0.9,hea", "comma-separated regime tokens"),
        Option("qubits", "4,6,8,10", "qubit counts"),
        Option("depth-factor", "2", "depth in blocks per qubit"),
        Option("instances", "200", "random initializations per point"),
        Option("param-index", "auto", "parameter slot to differentiate ('auto': first live ZZ coupling)"),
        *XXZ]),
    "variance-vs-depth": ("gradient variance against depth at fixed qubit counts", [
        Option("regimes", "thermal=0.5", "comma-separated regime tokens"),
        Option("qubits", "8", "qubit counts"),
        Option("depths", "4,8,16,32,64", "depths in blocks"),
        Option("instances", "200", "random initializations per point"),
        Option("param-index", "auto", "parameter slot to differentiate ('auto': first live ZZ coupling)"),
        *XXZ]),
    "otoc": ("X-X OTOC between the end qubits against depth", [
        Option("regimes", "pm=0.16,thermal=0.7,dtc=0.86", "comma-separated regime tokens"),
        Option("qubits", "8", "qubit counts"),
        Option("max-depth", "30", "largest depth in blocks"),
        Option("instances", "100", "random circuits per regime"),
        Option("method", "auto", "exact, stochastic or auto (exact up to 12 qubits)"),
        Option("samples", "100", "Haar states per stochastic estimate"),
    ]),
    "entropy": ("half-chain entanglement entropy against depth", [
        Option("regimes", "dtc=0.9,thermal=0.5", "comma-separated regime tokens"),
        Option("qubits", "8,10", "even qubit counts"),
        Option("max-depth", "auto", "largest depth in blocks ('auto': 4 N)"),
        Option("instances", "200", "random circuits per regime"),
    ]),
    "vqe": ("ADAM-driven VQE on the XXZ chain from random initializations", [
        Option("regimes", f"{VQE_MBL_REGIME},thermal=0.5", "comma-separated regime tokens"),
        Option("qubits", "12", "qubit count (one value)"),
        Option("depth", "auto", "depth in blocks ('auto': 2 N)"),
        Option("iterations", "200", "ADAM steps per run"),
        Option("instances", "100", "random initializations per regime"),
        Option("learning-rate", "0.05", "ADAM base learning rate"),
        Option("cosine", False, "decay the learning rate with a cosine schedule", flag=True),
        *XXZ]),
}


def _dest(name: str) -> str:
    return name.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floquet-vqe", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_options(p, options):
        for opt in options:
            if opt.flag:
                p.add_argument(f"--{opt.name}", dest=_dest(opt.name), action="store_const",
                               const=True, default=None, help=opt.help)
            else:
                shown = "" if opt.default is None else f" (default: {opt.default})"
                p.add_argument(f"--{opt.name}", dest=_dest(opt.name), default=None,
                               help=opt.help + shown)
        p.add_argument("--config", type=Path, default=None, help="INI file with an [experiment] section")

    for name, (help_text, options) in COMMANDS.items():
        add_options(sub.add_parser(name, help=help_text, description=help_text), options + COMMON)
    fig = sub.add_parser("reproduce-fig", help="run a preset reproducing one figure",
                         description="run a preset reproducing one figure")
    fig.add_argument("figure", help=f"figure id, one of {', '.join(FIGURES)}")
    fig.add_argument("--scale", default=None, help="desk (reduced, default) or paper")
    add_options(fig, COMMON)
    return parser


def load_config(path: Path | None) -> dict[str, str]:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"config: cannot read {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigurationError(f"config: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigurationError(f"config: {path} has no [experiment] section")
    return {_dest(k): v for k, v in parser.items("experiment")}


def resolve(args: argparse.Namespace, options: list[Option]) -> dict[str, object]:
    """Merge flags over config-file values over defaults, keyed by dest name."""
    config = load_config(getattr(args, "config", None))
    known = {_dest(o.name) for o in options} | {"scale"}
    unknown = sorted(set(config) - known)
    if unknown:
        raise ConfigurationError(f"config: unknown field(s) {', '.join(unknown)}")
    merged = {}
    for opt in options:
        key = _dest(opt.name)
        value = getattr(args, key, None)
        if value is None:
            value = config.get(key, opt.default)
        merged[key] = value
    if getattr(args, "scale", None) is not None:
        merged["scale"] = args.scale
    elif "scale" in config:
        merged["scale"] = config["scale"]
    return merged


# ---------------------------------------------------------------- experiments

@dataclass
class Context:
    seed: int
    workers: int
    out: Path
    plot: bool
    tied: bool
    stem: str


def common_context(values: dict, stem: str) -> Context:
    try:
        seed = int(values["seed"])
    except (TypeError, ValueError):
        raise ConfigurationError(f"seed: expected an integer, got {values['seed']!r}") from None
    if seed < 0:
        raise ConfigurationError("seed: must be >= 0")
    workers = default_workers() if values["workers"] is None else positive_int(values["workers"], "workers")
    return Context(seed, workers, Path(values["out"]), not boolean(values["no_plot"], "no-plot"),
                   boolean(values["tied"], "tied"), stem)


def _xxz(values: dict, n: int) -> XxzSpec:
    return XxzSpec(n, finite_float(values["xxz_j"], "xxz-j"), finite_float(values["xxz_delta"], "xxz-delta"))


def _param_index(values: dict, choice: RegimeChoice, n: int, depth: int) -> int:
    raw = str(values["param_index"]).strip().lower()
    if raw == "auto":
        return default_param_index(choice.ansatz_kind, n, depth)
    try:
        index = int(raw)
    except ValueError:
        raise ConfigurationError(f"param-index: expected an integer or 'auto', got {raw!r}") from None
    if index < 0:
        raise ConfigurationError("param-index: must be >= 0")
    return index


def _check_finite(rows: list[tuple], what: str) -> None:
    for row in rows:
        for v in row:
            if isinstance(v, (float, np.floating)) and not math.isfinite(v):
                raise NonFiniteError(f"{what}: non-finite value in row {row}")


def _variance_points(values: dict, ctx: Context, points) -> list:
    records = []
    for choice, n, depth in points:
        hamiltonian = build_xxz(_xxz(values, n))
        records.append(gradient_variance(
            choice.ansatz_kind, n, depth, choice.regime, hamiltonian,
            _param_index(values, choice, n, depth), positive_int(values["instances"], "instances"),
            ctx.seed, ctx.workers, ctx.tied))
    return records


def run_variance_vs_n(values: dict, ctx: Context) -> list[Path]:
    from .plots import plot_variance
    regimes = regime_list(values["regimes"])
    qubits = int_list(values["qubits"], "qubits")
    factor = positive_int(values["depth_factor"], "depth-factor")
    records = _variance_points(values, ctx, [(c, n, factor * n) for c in regimes for n in qubits])
    return _emit(ctx, VARIANCE_HEADER, variance_rows(records),
                 lambda rows, p: plot_variance(rows, "num_qubits", p, f"gradient variance, D = {factor}N"))


def run_variance_vs_depth(values: dict, ctx: Context) -> list[Path]:
    from .plots import plot_variance
    regimes = regime_list(values["regimes"])
    qubits = int_list(values["qubits"], "qubits")
    depths = int_list(values["depths"], "depths")
    records = _variance_points(values, ctx, [(c, n, d) for c in regimes for n in qubits for d in depths])
    return _emit(ctx, VARIANCE_HEADER, variance_rows(records),
                 lambda rows, p: plot_variance(rows, "depth", p, "gradient variance against depth"))


def run_otoc(values: dict, ctx: Context) -> list[Path]:
    from .plots import plot_otoc
    regimes = regime_list(values["regimes"])
    qubits = int_list(values["qubits"], "qubits")
    max_depth = positive_int(values["max_depth"], "max-depth")
    instances = positive_int(values["instances"], "instances")
    samples = positive_int(values["samples"], "samples")
    method = str(values["method"]).strip().upper()
    if method not in ("AUTO", "EXACT", "STOCHASTIC"):
        raise ConfigurationError(f"method: expected exact, stochastic or auto, got {values['method']!r}")
    traces = [otoc_trace(c.ansatz_kind, n, c.regime, max_depth, instances, ctx.seed,
                         None if method == "AUTO" else OtocMethod(method), samples, ctx.workers, ctx.tied)
              for c in regimes for n in qubits]
    return _emit(ctx, OTOC_HEADER, otoc_rows(traces),
                 lambda rows, p: plot_otoc(rows, p, "end-to-end X-X OTOC"))


def run_entropy(values: dict, ctx: Context) -> list[Path]:
    from .plots import plot_entropy
    regimes = regime_list(values["regimes"])
    qubits = int_list(values["qubits"], "qubits")
    for n in qubits:
        if n % 2:
            raise ConfigurationError(f"qubits: half-chain entropy needs even qubit counts, got {n}")
    instances = positive_int(values["instances"], "instances")
    auto = str(values["max_depth"]).strip().lower() == "auto"
    traces = [entropy_growth(c.ansatz_kind, n, c.regime,
                             4 * n if auto else positive_int(values["max_depth"], "max-depth"),
                             instances, ctx.seed, ctx.workers, ctx.tied)
              for c in regimes for n in qubits]
    return _emit(ctx, ENTROPY_HEADER, entropy_rows(traces),
                 lambda rows, p: plot_entropy(rows, p, "half-chain entropy growth"))


def run_vqe_command(values: dict, ctx: Context) -> list[Path]:
    from .plots import plot_vqe
    regimes = regime_list(values["regimes"])
    qubits = int_list(values["qubits"], "qubits")
    if len(qubits) != 1:
        raise ConfigurationError("qubits: the vqe experiment takes a single qubit count")
    n = qubits[0]
    depth = 2 * n if str(values["depth"]).strip().lower() == "auto" else positive_int(values["depth"], "depth")
    try:
        iterations = int(values["iterations"])
    except (TypeError, ValueError):
        raise ConfigurationError(f"iterations: expected an integer, got {values['iterations']!r}") from None
    if iterations < 0:
        raise ConfigurationError("iterations: must be >= 0")
    lr = finite_float(values["learning_rate"], "learning-rate")
    runs = [run_vqe(c.ansatz_kind, n, depth, c.regime, _xxz(values, n), iterations,
                    positive_int(values["instances"], "instances"), ctx.seed, ctx.workers, lr,
                    boolean(values["cosine"], "cosine"), ctx.tied)
            for c in regimes]
    return _emit(ctx, VQE_HEADER, vqe_rows(runs),
                 lambda rows, p: plot_vqe(rows, p, f"VQE dynamics, N = {n}, D = {depth}"))


def _emit(ctx: Context, header, rows: list[tuple], plot: Callable) -> list[Path]:
    _check_finite(rows, ctx.stem)
    ctx.out.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(ctx.out / f"{ctx.stem}.csv", header, rows)
    paths = [csv_path]
    if ctx.plot:
        paths.append(plot(read_csv(csv_path), ctx.out / f"{ctx.stem}.svg"))
    return paths


RUNNERS = {
    "variance-vs-n": run_variance_vs_n,
    "variance-vs-depth": run_variance_vs_depth,
    "otoc": run_otoc,
    "entropy": run_entropy,
    "vqe": run_vqe_command,
}


# ---------------------------------------------------------------- figure presets

_DEPTHS_DESK = "4,8,16,32,64"
_DEPTHS_PAPER = "4,8,16,32,64,128"

# figure id -> (command, desk values, paper values)
FIGURES: dict[str, tuple[str, dict, dict]] = {
    "2a": ("variance-vs-n",
           {"regimes": "pm=0.1,thermal=0.5,dtc=0.9,hea", "qubits": "4,6,8,10", "depth_factor": "2",
            "instances": "200"},
           {"regimes": "pm=0.1,thermal=0.5,dtc=0.9,hea", "qubits": "4,6,8,10,12,14",
            "depth_factor": "2", "instances": "200"}),
    "2b": ("variance-vs-depth",
           {"regimes": "thermal=0.5", "qubits": "6,8", "depths": _DEPTHS_DESK, "instances": "200"},
           {"regimes": "thermal=0.5", "qubits": "6,8,10,12", "depths": _DEPTHS_PAPER, "instances": "200"}),
    "2c": ("variance-vs-depth",
           {"regimes": "pm=0.1", "qubits": "6,8", "depths": _DEPTHS_DESK, "instances": "200"},
           {"regimes": "pm=0.1", "qubits": "6,8,10,12", "depths": _DEPTHS_PAPER, "instances": "200"}),
    "2d": ("variance-vs-depth",
           {"regimes": "dtc=0.9", "qubits": "6,8", "depths": _DEPTHS_DESK, "instances": "200"},
           {"regimes": "dtc=0.9", "qubits": "6,8,10,12", "depths": _DEPTHS_PAPER, "instances": "200"}),
    "3": ("otoc",
          {"regimes": "pm=0.16,thermal=0.7,dtc=0.86", "qubits": "8", "max_depth": "30", "instances": "100"},
          {"regimes": "pm=0.16,thermal=0.7,dtc=0.86", "qubits": "8", "max_depth": "30", "instances": "100"}),
    "4a": ("entropy",
           {"regimes": "dtc=0.9", "qubits": "8,10", "instances": "200"},
           {"regimes": "dtc=0.9", "qubits": "8,10,12,16", "instances": "1000"}),
    "4b": ("entropy",
           {"regimes": "thermal=0.5", "qubits": "6,8,10", "instances": "200"},
           {"regimes": "thermal=0.5", "qubits": "6,8,10,12", "instances": "1000"}),
    "5": ("vqe",
          {"regimes": f"{VQE_MBL_REGIME},thermal=0.5", "qubits": "8", "iterations": "200", "instances": "50"},
          {"regimes": f"{VQE_MBL_REGIME},thermal=0.5", "qubits": "12", "iterations": "200", "instances": "100"}),
    "6": ("vqe",
          {"regimes": f"{VQE_MBL_REGIME},thermal=0.5", "qubits": "12", "iterations": "200", "instances": "20"},
          {"regimes": f"{VQE_MBL_REGIME},thermal=0.5", "qubits": "12", "iterations": "200", "instances": "1000"}),
}


def run_figure(args: argparse.Namespace) -> tuple[list[Path], dict, Context]:
    figure = str(args.figure).strip().lower()
    if figure not in FIGURES:
        raise ConfigurationError(f"figure: unknown id {args.figure!r}; expected one of {', '.join(FIGURES)}")
    common = resolve(args, COMMON)
    scale = str(common.get("scale") or "desk").strip().lower()
    if scale not in ("desk", "paper"):
        raise ConfigurationError(f"scale: expected desk or paper, got {scale!r}")
    command, desk, paper = FIGURES[figure]
    values = {_dest(o.name): o.default for o in COMMANDS[command][1]}
    values.update(desk if scale == "desk" else paper)
    values.update({k: v for k, v in common.items() if k != "scale"})
    ctx = common_context(values, f"fig{figure}")
    files = RUNNERS[command](values, ctx)
    return files, {"command": "reproduce-fig", "figure": figure, "scale": scale,
                   "experiment": command, **_echo(values)}, ctx


def _echo(values: dict) -> dict:
    return {k: (None if v is None else v if isinstance(v, (bool, int, float)) else str(v))
            for k, v in values.items()}


def dispatch(argv: list[str] | None = None) -> list[Path]:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    if args.command == "reproduce-fig":
        files, echo, ctx = run_figure(args)
    else:
        options = COMMANDS[args.command][1] + COMMON
        values = resolve(args, options)
        ctx = common_context(values, args.command.replace("-", "_"))
        files = RUNNERS[args.command](values, ctx)
        echo = {"command": args.command, **_echo(values)}
    echo["workers"] = ctx.workers
    manifest = write_manifest(ctx.out, echo, __version__, time.perf_counter() - start)
    return files + [manifest]


def main(argv: list[str] | None = None) -> int:
    try:
        files = dispatch(argv)
    except (ConfigurationError, ContractViolation) as exc:
        print(f"floquet-vqe: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"floquet-vqe: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NonFiniteError, FloatingPointError) as exc:
        print(f"floquet-vqe: non-finite result: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

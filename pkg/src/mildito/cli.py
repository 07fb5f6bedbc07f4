"""Batch experiment runner.

``mildito <suite>`` validates a configuration (JSON file, overridden by
flags whose names mirror the config keys), runs the requested
verification suite and writes ``report.csv`` plus ``summary.json`` into
the output directory.

Exit codes: 0 all checks passed, 1 some check failed, 2 invalid
configuration (the message names the violated hypothesis), 3 a simulated
path blew up (the message names the path index).

report.csv is byte-stable for a fixed (config, seed) regardless of
--workers; wall-clock timings therefore live in summary.json only,
under the "timings" key, which is excluded from that contract.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .nemytskii import FIELD_NAMES, get_field
from .process import BlowUpError
from .suites import run_suite
from .testfunctions import TEST_FUNCTION_NAMES

SCHEMA_VERSION = 1

SUITE_NAMES = ("gamma", "nemytskii", "simulate", "ito", "dynkin", "weak", "all")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    suite: str = "all"
    N: int = 64
    K: int = 64
    J: int = 256
    M_t: int = 200
    T: float = 0.1
    t0: float = 0.0
    paths: int = 20_000
    seed: int = 0
    field: str = "tanh"
    phi: str = "squared_norm"
    p: float = 10.0
    q: float = 40.0
    r: float = 0.5
    beta: float = -0.5
    eps: float = 0.0
    delta: float | None = None
    stopping: str = "terminal"
    level: float = math.inf
    out: str = "."
    workers: int = 1


_INT_KEYS = {"N", "K", "J", "M_t", "paths", "seed", "workers"}
_FLOAT_KEYS = {"T", "t0", "p", "q", "r", "beta", "eps", "delta", "level"}


def _coerce(name, value):
    if value is None:
        return None
    if name in _INT_KEYS:
        return int(value)
    if name in _FLOAT_KEYS:
        return float(value)
    return str(value)


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        for key, value in data.items():
            if key not in ExperimentConfig.__dataclass_fields__:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, _coerce(key, value))
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, _coerce(key, value))
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Check every hypothesis the selected suite relies on, by name."""
    if cfg.suite not in SUITE_NAMES:
        raise ConfigError(f"unknown suite {cfg.suite!r}; choose from {SUITE_NAMES}")
    if cfg.N < 1 or cfg.K < 1 or cfg.J < 1 or cfg.M_t < 1:
        raise ConfigError("N, K, J, M_t must be positive")
    if not cfg.T > cfg.t0:
        raise ConfigError(f"requires T > t0, got T={cfg.T}, t0={cfg.t0}")
    if cfg.paths < 2:
        raise ConfigError("paths must be >= 2")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.field not in FIELD_NAMES:
        raise ConfigError(f"unknown field {cfg.field!r}; registry has {FIELD_NAMES}")
    if cfg.phi not in TEST_FUNCTION_NAMES:
        raise ConfigError(
            f"unknown test function {cfg.phi!r}; registry has {TEST_FUNCTION_NAMES}")
    if cfg.stopping not in ("terminal", "hitting"):
        raise ConfigError(f"unknown stopping rule {cfg.stopping!r}")

    gamma_like = cfg.suite in ("gamma", "all")
    nemytskii_like = cfg.suite in ("nemytskii", "all")
    if gamma_like:
        if not cfg.r > 0.25:
            raise ConfigError(
                f"suite 'gamma' requires r > 1/4 (smoothing-bound hypothesis), "
                f"got r={cfg.r}")
        if not cfg.p >= 2:
            raise ConfigError(
                f"suite 'gamma' requires p >= 2 (Gaussian-moment hypothesis), "
                f"got p={cfg.p}")
        if not cfg.eps >= 0:
            raise ConfigError(f"requires eps >= 0, got eps={cfg.eps}")
        if not cfg.beta + cfg.eps < -0.25:
            raise ConfigError(
                f"embedding hypothesis violated: requires beta + eps < -1/4, "
                f"got beta={cfg.beta}, eps={cfg.eps}")
        if not cfg.beta <= -1.0 / (2.0 * cfg.p):
            raise ConfigError(
                f"multiplication hypothesis violated: requires beta <= -1/(2p), "
                f"got beta={cfg.beta}, p={cfg.p}")
    if nemytskii_like:
        order = get_field(cfg.field).order
        if not cfg.q > order * cfg.p:
            raise ConfigError(
                f"composition hypothesis violated: requires q in (n p, inf) with "
                f"n={order}, got p={cfg.p}, q={cfg.q}")
        if not cfg.beta < -0.25:
            raise ConfigError(
                f"diffusion hypothesis violated: requires beta < -1/4, "
                f"got beta={cfg.beta}")
        floor = max(order / (2.0 * (abs(cfg.beta) - 0.25)), 2.0 * order)
        if not cfg.p > floor:
            raise ConfigError(
                f"diffusion hypothesis violated: requires "
                f"p > max{{n/(2(|beta|-1/4)), 2n}} = {floor:.6g}, got p={cfg.p}")
        delta = cfg.delta if cfg.delta is not None else order / (order + 1.0)
        if not floor / cfg.p < delta < 1.0:
            raise ConfigError(
                f"diffusion hypothesis violated: requires delta in "
                f"({floor / cfg.p:.6g}, 1), got delta={delta}")


def write_path_csv(path, destination, regularized: bool = False) -> None:
    """Columnar debug export of a simulated path.

    Schema: header ``time,mode,coefficient``, one row per (node, mode)
    pair, 1-based mode indices, RFC-4180 quoting.  With ``regularized``
    the companion process is written instead of the states.
    """
    states = path.regularized if regularized else path.states
    if states is None:
        raise ValueError("path has no regularized companion; call regularize first")
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["time", "mode", "coefficient"])
        for i, t in enumerate(path.grid.nodes()):
            for n in range(states.shape[1]):
                writer.writerow([repr(float(t)), n + 1, repr(float(states[i, n]))])


def render_report(rows) -> bytes:
    """RFC-4180 CSV of the report rows, without the timing column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["suite", "check_id", "lhs", "rhs", "stderr", "tolerance",
                     "verdict"])
    for row in rows:
        writer.writerow([row.suite, row.check_id, repr(row.lhs), repr(row.rhs),
                         repr(row.stderr), repr(row.tolerance), row.verdict])
    return buf.getvalue().encode("utf-8")


def render_summary(cfg, rows) -> str:
    failed = sum(1 for row in rows if row.verdict != "pass")
    config = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
              for k, v in dataclasses.asdict(cfg).items()}
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "seed": cfg.seed,
        "totals": {"checks": len(rows), "passed": len(rows) - failed,
                   "failed": failed},
        "versions": {"mildito": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        # timings are excluded from the byte-stability contract
        "timings": {f"{row.suite}/{row.check_id}": round(row.wall_time, 6)
                    for row in rows},
    }
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"


def run(cfg: ExperimentConfig) -> int:
    validate(cfg)
    rows = run_suite(cfg.suite, cfg)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_bytes(render_report(rows))
    (out_dir / "summary.json").write_text(render_summary(cfg, rows),
                                          encoding="utf-8")
    return 0 if all(row.verdict == "pass" for row in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mildito",
        description="Run mild stochastic calculus verification suites.")
    parser.add_argument("suite", choices=SUITE_NAMES)
    parser.add_argument("--config", help="JSON config file; flags override it")
    for name, field_ in ExperimentConfig.__dataclass_fields__.items():
        if name == "suite":
            continue
        parser.add_argument(f"--{name}", default=None,
                            help=f"config key {name} (default {field_.default})")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop("config")
    suite = args.pop("suite")
    try:
        cfg = load_config(config_path, args)
        cfg.suite = suite
        return run(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"mildito: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        print(f"mildito: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

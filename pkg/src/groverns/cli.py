"""Command-line entry point: ``groverns {simulate,classify,verify,figure,scan}``.

Exit codes: 0 success, 2 invalid usage or configuration, 3 resource cap
exceeded (``GROVERNS_MAX_QUBITS``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .analysis import FIGURE_IDS, default_t_max, figure_data, regime_scan
from .core import GroverInstance, max_qubits
from .errors import GroverNoiseError, SizeError
from .memory import MarkovNoiseParams, simulate
from .noise import NAMED_UNITARIES, NoiseLayout, NoiseUnitary, classify_good_noise
from .trace import format_csv
from .verify import SUITES, run_suite

log = logging.getLogger("groverns")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RESOURCE = 3

PLACEMENTS = ("prefix", "suffix", "paper-eq7")


class UsageError(Exception):
    """Invalid command-line or config-file input."""


# -- parsing helpers -------------------------------------------------------------

def parse_unitary(value: Any) -> NoiseUnitary:
    """Alias (``x``, ``y``, ``z``, ``i``, ``h``), a JSON object string, or a mapping."""
    if isinstance(value, NoiseUnitary):
        return value
    if isinstance(value, str):
        key = value.strip()
        if key.lower() in NAMED_UNITARIES:
            return NoiseUnitary.from_name(key.lower())
        try:
            value = json.loads(key)
        except json.JSONDecodeError:
            raise UsageError(f"unknown unitary {key!r}; use one of {sorted(NAMED_UNITARIES)} "
                             "or a JSON object with a_re, a_im, b_re, b_im, theta, phi") from None
    if isinstance(value, Mapping):
        try:
            return NoiseUnitary.from_params(value)
        except KeyError as exc:
            raise UsageError(f"unitary parameters missing {exc}") from None
    raise UsageError(f"cannot interpret unitary {value!r}")


def parse_int_list(value: Any) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(x) for x in value]
    if isinstance(value, (int, np.integer)):
        return [int(value)]
    try:
        return [int(x) for x in str(value).split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {value!r}") from None


def parse_grid(value: Any) -> list[float]:
    """``start:stop:step`` (both ends inclusive) or a comma-separated list."""
    if isinstance(value, (list, tuple)):
        return [float(x) for x in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    text = str(value).strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise UsageError(f"bad range {text!r}: need step > 0 and stop >= start")
            count = int(round((stop - start) / step)) + 1
            return [float(np.round(start + i * step, 10)) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def merged(args: argparse.Namespace, keys: Sequence[str]) -> dict[str, Any]:
    """Config-file values overridden by any flag the user actually set."""
    cfg = load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(keys)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _check_n(n: Any) -> int:
    if n is None:
        raise UsageError("--n is required")
    try:
        n = int(n)
    except (TypeError, ValueError):
        raise UsageError(f"--n must be an integer, got {n!r}") from None
    if n < 1:
        raise UsageError(f"--n must be at least 1, got {n}")
    cap = max_qubits()
    if n > cap:
        raise SizeError(f"n={n} exceeds the qubit cap {cap} (set GROVERNS_MAX_QUBITS to raise it)")
    return n


def _write(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


# -- run configuration ---------------------------------------------------------

SIM_KEYS = ("n", "w", "unitary", "sites", "m", "placement", "p", "mu", "t_max", "output", "format", "method")


@dataclass(frozen=True)
class RunConfig:
    n: int
    w: int
    unitary: NoiseUnitary
    layout: NoiseLayout
    p: float
    mu: float
    t_max: int
    output: str | None
    format: str
    method: str

    @classmethod
    def from_mapping(cls, cfg: Mapping[str, Any]) -> "RunConfig":
        n = _check_n(cfg.get("n"))
        w = cfg.get("w", "default")
        w = 0 if w in (None, "default") else int(w)
        if not 0 <= w < (1 << n):
            raise UsageError(f"--w={w} outside [0, {(1 << n) - 1}]")
        u = parse_unitary(cfg.get("unitary", "x"))
        if cfg.get("sites") is not None:
            if cfg.get("m") is not None:
                raise UsageError("give either --sites or --m, not both")
            layout = NoiseLayout(n, tuple(parse_int_list(cfg["sites"])))
        else:
            placement = cfg.get("placement", "prefix")
            if placement not in PLACEMENTS:
                raise UsageError(f"--placement must be one of {PLACEMENTS}")
            layout = NoiseLayout.from_rule(n, int(cfg.get("m", 1)), placement)
        p = float(cfg.get("p", 0.0))
        mu = float(cfg.get("mu", 0.0))
        MarkovNoiseParams(p, mu)
        t_max = cfg.get("t_max")
        t_max = default_t_max(1 << n) if t_max is None else int(t_max)
        fmt = cfg.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        method = cfg.get("method", "reduced")
        return cls(n, w, u, layout, p, mu, t_max, cfg.get("output"), fmt, method)


# -- commands ----------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_mapping(merged(args, SIM_KEYS + ("config",)))
    trace = simulate(GroverInstance(cfg.n, cfg.w), cfg.unitary, cfg.layout,
                     MarkovNoiseParams(cfg.p, cfg.mu), cfg.t_max, method=cfg.method)
    _write(trace.to_csv() if cfg.format == "csv" else trace.to_json(), cfg.output)
    return EXIT_OK


def classification_report(u: NoiseUnitary) -> dict[str, Any]:
    res = classify_good_noise(u)
    return {
        "unitary": u.label(),
        "classification": res.classification.value,
        "good": res.classification.is_good,
        "M": res.M,
        "invariance": res.classification.invariance,
        "block_dimensions": list(res.block_dimensions),
    }


def cmd_classify(args: argparse.Namespace) -> int:
    report = classification_report(parse_unitary(args.unitary))
    if args.format == "json":
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        sys.stdout.write(f"unitary: {report['unitary']}\n"
                         f"classification: {report['classification']}\n"
                         f"M: {report['M']}\n"
                         f"invariance: {report['invariance']}\n")
        sys.stdout.write(json.dumps(report) + "\n")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    verdict = run_suite(args.suite, budget=args.budget, seed=args.seed)
    text = json.dumps(verdict, indent=2) + "\n"
    _write(text, args.output)
    for chk in verdict["checks"]:
        log.info("%-5s %s: %s", chk["status"], chk["name"], chk["detail"])
    return EXIT_OK if verdict["passed"] else 1


def cmd_figure(args: argparse.Namespace) -> int:
    opts = {"method": args.method, "jobs": args.jobs}
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ds in figure_data(args.figure_id, opts):
        path = out_dir / f"{ds.name}.csv"
        path.write_text(ds.to_csv())
        log.info("wrote %s", path)
    return EXIT_OK


SCAN_KEYS = ("n", "p", "mu", "unitary", "m", "placement", "t_max", "output", "boundary", "method", "jobs")


def cmd_scan(args: argparse.Namespace) -> int:
    cfg = merged(args, SCAN_KEYS + ("config",))
    if cfg.get("n") is None:
        raise UsageError("--n is required")
    n_list = [_check_n(n) for n in parse_int_list(cfg["n"])]
    p_grid = parse_grid(cfg.get("p", "0:1:0.1"))
    mu_grid = parse_grid(cfg.get("mu", "0"))
    placement = cfg.get("placement", "prefix")
    if placement not in PLACEMENTS:
        raise UsageError(f"--placement must be one of {PLACEMENTS}")
    u = parse_unitary(cfg.get("unitary", "x"))
    t_max = cfg.get("t_max")
    rmap = regime_scan(n_list, p_grid, mu_grid, u=u, layout_rule=placement, m=int(cfg.get("m", 1)),
                       t_max=None if t_max is None else int(t_max), jobs=int(cfg.get("jobs") or 1),
                       method=cfg.get("method", "reduced"))
    meta = dict(rmap.meta)
    _write(format_csv(meta, rmap.points_table()), cfg.get("output"))
    if cfg.get("boundary"):
        diag = dict(meta)
        diag["monotone_in_mu"] = ";".join(f"N{k}:{int(v)}" for k, v in rmap.monotone_in_mu().items())
        diag["monotone_in_N"] = ";".join(f"mu{k:g}:{int(v)}" for k, v in rmap.monotone_in_N().items())
        _write(format_csv(diag, rmap.boundary_table()), cfg["boundary"])
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groverns",
                                     description="Exact Grover search under Markov-correlated local noise.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="success probability P(t) for one configuration")
    sim.add_argument("--config", help="flat JSON file of defaults; flags override it")
    sim.add_argument("--n", type=int, help="number of qubits")
    sim.add_argument("--w", help="marked index (0-based) or 'default' for 0")
    sim.add_argument("--unitary", help="x, y, z, i, h or a JSON parameter object")
    sim.add_argument("--sites", help="comma-separated noisy qubit positions")
    sim.add_argument("--m", type=int, help="number of noisy qubits, placed by --placement")
    sim.add_argument("--placement", choices=PLACEMENTS)
    sim.add_argument("--p", type=float, help="stationary noise probability")
    sim.add_argument("--mu", type=float, help="memory parameter")
    sim.add_argument("--t-max", dest="t_max", type=int, help="last Grover step (default 3*floor(pi/4*sqrt(N)))")
    sim.add_argument("--output", help="output file (default stdout)")
    sim.add_argument("--format", choices=("csv", "json"))
    sim.add_argument("--method", choices=("reduced", "dense"))
    sim.set_defaults(func=cmd_simulate)

    cls = sub.add_parser("classify", help="good-noise classification of a single-qubit unitary")
    cls.add_argument("unitary", help="x, y, z, i, h or a JSON parameter object")
    cls.add_argument("--format", choices=("text", "json"), default="text")
    cls.set_defaults(func=cmd_classify)

    ver = sub.add_parser("verify", help="run a property suite and print a JSON verdict")
    ver.add_argument("suite", choices=SUITES)
    ver.add_argument("--budget", type=float, default=600.0, help="time budget in seconds")
    ver.add_argument("--seed", type=int, default=42, help="seed for random unitaries and placements")
    ver.add_argument("--output", help="verdict file (default stdout)")
    ver.set_defaults(func=cmd_verify)

    fig = sub.add_parser("figure", help="write the CSV datasets behind a figure")
    fig.add_argument("figure_id", choices=FIGURE_IDS + ("fig9",))
    fig.add_argument("--out-dir", default=".", help="directory for the CSV files")
    fig.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    fig.add_argument("--method", choices=("reduced", "dense"), default="reduced")
    fig.set_defaults(func=cmd_figure)

    scan = sub.add_parser("scan", help="performance-gate scan over (n, mu, p)")
    scan.add_argument("--config", help="flat JSON file of defaults; flags override it")
    scan.add_argument("--n", help="qubit counts, comma-separated")
    scan.add_argument("--p", help="start:stop:step (inclusive) or comma-separated values")
    scan.add_argument("--mu", help="start:stop:step (inclusive) or comma-separated values")
    scan.add_argument("--unitary")
    scan.add_argument("--m", type=int)
    scan.add_argument("--placement", choices=PLACEMENTS)
    scan.add_argument("--t-max", dest="t_max", type=int)
    scan.add_argument("--output", help="point table file (default stdout)")
    scan.add_argument("--boundary", help="also write the per-(N, mu) boundary table here")
    scan.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    scan.add_argument("--method", choices=("reduced", "dense"))
    scan.set_defaults(func=cmd_scan)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SizeError as exc:
        print(f"groverns: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, GroverNoiseError, ValueError) as exc:
        print(f"groverns: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

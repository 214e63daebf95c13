"""Command-line front end: exponent sweeps to CSV, seeded simulations to JSON lines, self-checks.

Exit codes: 0 success, 1 usage error, 2 failed invariant or check, 3 resource guard.
All flags take nats; ``--units bits`` rescales rate, entropy and exponent
columns on output only.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__, awgn, mac, modulo, prob, sim, verify
from .awgn import AwgnParams, FlashDesign
from .mac import MacParams, RatePair
from .modulo import ModuloParams
from .prob import Pmf
from .values import ExponentValue

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_GUARD = 0, 1, 2, 3
SIM_SCHEMES = ("awgn-flash", "modulo-fixed", "modulo-variable")
LN2 = math.log(2.0)

# column name -> carries an information unit (rescaled by --units bits)
AWGN_COLUMNS = {"R": True, "E_wsp": True, "E_achievable": True, "regime": False}
MODULO_COLUMNS = {
    "theta": {"theta": True, "r_theta": True, "E_theta": True},
    "rate": {"R": True, "E_wsp": True, "E_achievable": True, "regime": False},
    "tau": {"tau": False, "overflow": True, "overflow_block": True},
}
MAC_COLUMNS = {"R1": True, "R2": True, "E1": True, "E2": True, "E3": True, "E_wsp": True,
               "class": False, "R_h1": True, "R_h2": True}
SUMMARY_COLUMNS = ("scheme", "trials", "block_length", "errors_total", "error_rate", "ci_low", "ci_high",
                   "exponent", "exponent_lower", "censored", "checks_passed")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    lo: float
    hi: float
    points: int
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise UsageError(f"grid needs lo < hi, got {self.lo}:{self.hi}")
        if self.points < 2:
            raise UsageError("grid needs at least 2 points")

    @classmethod
    def parse(cls, text: str, axis: str, fixed: dict | None = None) -> SweepSpec:
        try:
            lo, hi, points = text.split(":")
            return cls(axis, float(lo), float(hi), int(points), fixed or {})
        except ValueError as exc:
            raise UsageError(f"--grid expects lo:hi:points, got {text!r}") from exc

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    def to_dict(self) -> dict:
        return {"axis": self.axis, "lo": self.lo, "hi": self.hi, "points": self.points, "fixed": self.fixed}


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    started: str | None = None
    finished: str | None = None

    def to_dict(self, with_times: bool = True) -> dict:
        out = {"tool": "flashhelp", "version": __version__, "command": self.command,
               "config": self.config, "seed": self.seed}
        if with_times:
            out["started"], out["finished"] = self.started, self.finished
        return out

    def header(self) -> str:
        return "# " + json.dumps(self.to_dict(), sort_keys=True)


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


# -- formatting --------------------------------------------------------------------------------
def fmt(x) -> str:
    """9 significant digits; +-inf as the tokens inf / neg_inf."""
    if isinstance(x, ExponentValue):
        x = x.value
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "neg_inf"
    return f"{x:.9g}"


def _regime(e: ExponentValue) -> str:
    return e.kind.value


def _render_csv(columns: dict, rows: Iterable[Sequence], units: str, manifest: RunManifest) -> str:
    scale = 1.0 / LN2 if units == "bits" else 1.0
    flags = list(columns.values())
    buf = io.StringIO()
    buf.write(manifest.header() + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for value, unit in zip(row, flags):
            if unit and not isinstance(value, str):
                value = float(value.value if isinstance(value, ExponentValue) else value) * scale
            cells.append(fmt(value))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _plotscript(csv_path: str, columns: Sequence[str], x: str, ys: Sequence[str], units: str) -> str:
    lines = [
        "# gnuplot script",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key top right",
        f"set xlabel '{x} [{units}]'",
        f"set ylabel 'exponent [{units}]'",
        "set yrange [0:*]",
    ]
    xi = list(columns).index(x) + 1
    parts = [f"'{csv_path}' every ::1 using {xi}:{list(columns).index(y) + 1} with lines title '{y}'" for y in ys]
    lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"


def _emit(args, columns: dict, rows, manifest: RunManifest, x: str, ys: Sequence[str]) -> None:
    text = _render_csv(columns, rows, args.units, manifest)
    _write(text, args.out)
    if args.emit_plotscript:
        if not args.out or args.out == "-":
            raise UsageError("--emit-plotscript needs --out FILE")
        Path(args.emit_plotscript).write_text(_plotscript(args.out, list(columns), x, ys, args.units), encoding="utf-8")


# -- input parsing -----------------------------------------------------------------------------
def parse_pmf(text: str) -> Pmf:
    """Inline comma list, or a path to a file holding whitespace/comma separated numbers."""
    if text is None:
        raise UsageError("--pmf is required")
    path = Path(text)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    try:
        values = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"cannot parse PMF {text!r}") from exc
    try:
        return Pmf(values)
    except ValueError as exc:
        raise UsageError(f"invalid PMF: {exc}") from exc


def _int_list(text: str, name: str) -> list[int]:
    try:
        values = [int(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise UsageError(f"{name} expects integers, got {text!r}") from exc
    if any(v < 1 for v in values):
        raise UsageError(f"{name} values must be positive")
    return values


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use flag names without dashes."""
    out = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _resolved(args) -> dict:
    skip = {"func", "config", "out", "emit_plotscript", "workers", "tamper"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- subcommands -------------------------------------------------------------------------------
def cmd_exponent_awgn(args) -> int:
    if not args.gamma > 0:
        raise UsageError("--gamma must be positive")
    if args.rate_helper < 0:
        raise UsageError("--rate-helper must be nonnegative")
    if (args.tau is None) != (args.slack is None):
        raise UsageError("give --tau and --slack together (or neither for the optimized limit)")
    sweep = SweepSpec.parse(args.grid or "0:1.2:400", "R", {"gamma": args.gamma, "R_h": args.rate_helper})
    manifest = RunManifest("exponent-awgn", {**_resolved(args), "sweep": sweep.to_dict()}, started=_now())
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", awgn.FlashRateWarning)
        for rate in sweep.values():
            if rate < 0:
                raise UsageError("rates must be nonnegative")
            w = awgn.wsp_awgn(rate, args.gamma, args.rate_helper)
            a = awgn.achievable_exponent(rate, args.gamma, args.rate_helper, args.tau, args.slack)
            rows.append((rate, w, a, _regime(w)))
    manifest.finished = _now()
    _emit(args, AWGN_COLUMNS, rows, manifest, "R", ("E_wsp", "E_achievable"))
    return EXIT_OK


def cmd_exponent_modulo(args) -> int:
    p = parse_pmf(args.pmf)
    log_k = math.log(p.K)
    axis = args.axis
    if axis == "theta":
        default = f"0:{1.1 * float(np.max(-np.log(p.probs[p.probs > 0]))) + 0.1}:200"
    elif axis == "rate":
        default = f"0:{log_k}:200"
    else:
        default = "0.01:0.99:99"
    sweep = SweepSpec.parse(args.grid or default, axis, {"R_h": args.rate_helper})
    manifest = RunManifest("exponent-modulo", {**_resolved(args), "pmf": p.probs.tolist(),
                                               "sweep": sweep.to_dict()}, started=_now())
    rows = []
    for x in sweep.values():
        if axis == "theta":
            if x < 0:
                raise UsageError("theta must be nonnegative")
            rows.append((x, modulo.r_of_theta(p, x), modulo.helper_failure_exponent(p, x)))
        elif axis == "rate":
            if x < 0:
                raise UsageError("rates must be nonnegative")
            w = modulo.wsp_modulo(p, x, args.rate_helper)
            a = modulo.modulo_achievable_exponent(p, x, args.rate_helper)
            rows.append((x, w, a, _regime(w)))
        else:
            if not 0 < x < 1:
                raise UsageError("tau grid must lie inside (0, 1)")
            per_segment = modulo.overflow_exponent(p, args.rate_helper, x)
            rows.append((x, per_segment, per_segment.scaled(x) if not per_segment.is_infinite else per_segment))
    manifest.finished = _now()
    ys = {"theta": ("r_theta", "E_theta"), "rate": ("E_wsp", "E_achievable"), "tau": ("overflow", "overflow_block")}
    columns = MODULO_COLUMNS[axis]
    _emit(args, columns, rows, manifest, next(iter(columns)), ys[axis])
    return EXIT_OK


def cmd_exponent_mac(args) -> int:
    if not (args.gamma1 > 0 and args.gamma2 > 0):
        raise UsageError("--gamma1 and --gamma2 must be positive")
    if args.rate_helper < 0:
        raise UsageError("--rate-helper must be nonnegative")
    sweep = SweepSpec.parse(args.grid or "0:1.2:200", "R1,R2",
                            {"gamma1": args.gamma1, "gamma2": args.gamma2, "R_h": args.rate_helper})
    if sweep.lo < 0:
        raise UsageError("rates must be nonnegative")
    params = MacParams.from_snr(args.gamma1, args.gamma2)
    manifest = RunManifest("exponent-mac", {**_resolved(args), "sweep": sweep.to_dict()}, started=_now())
    rows = []
    axis = sweep.values()
    for r1 in axis:
        for r2 in axis:
            rp = RatePair(float(r1), float(r2))
            e1, e2, e3 = mac.wsp_branches(rp, params, args.rate_helper)
            split = mac.optimal_help_split(rp, args.rate_helper)
            rows.append((r1, r2, e1, e2, e3, min(e1, e2, e3),
                         mac.classify_rate_point(rp, params, args.rate_helper).value, split.h1, split.h2))
    manifest.finished = _now()
    _emit(args, MAC_COLUMNS, rows, manifest, "R1", ("E_wsp",))
    return EXIT_OK


def _sim_configs(args) -> list[tuple[dict, Callable[[sim.RngPlan], sim.SimResult], Callable[[], float] | None]]:
    """(config dict, runner, exact error probability or None) for every configuration requested."""
    scheme = args.scheme
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    configs = []
    try:
        if scheme == "awgn-flash":
            if args.slack is not None and args.slack <= 0:
                raise UsageError("--slack must be positive")
            design = FlashDesign(args.rate_helper, args.tau, args.slack if args.slack is not None else 1.0)
            params = AwgnParams.from_snr(args.gamma)
            for t in _int_list(args.segment or "64", "--segment"):
                cfg = sim.AwgnFlashConfig(params, design, t)
                conf = {"scheme": scheme, "gamma": args.gamma, "rate_helper": design.helper_rate,
                        "tau": design.tau, "slack": design.slack, "t": t, "trials": args.trials}
                exact = (lambda t=t, s=design.slack: prob.gaussian_sphere_tail(t, s)) if args.exact else None
                configs.append((conf, lambda plan, cfg=cfg: sim.simulate_flash_awgn(cfg, args.trials, plan), exact))
        elif scheme == "modulo-fixed":
            mp = ModuloParams(parse_pmf(args.pmf))
            theta = args.theta if args.theta is not None else 1.0
            for t in _int_list(args.segment or "12", "--segment"):
                conf = {"scheme": scheme, "pmf": mp.noise.probs.tolist(), "theta": theta, "t": t,
                        "trials": args.trials}
                exact = (lambda t=t: sim.exact_error_modulo_fixed(mp, theta, t)) if args.exact else None
                configs.append((conf, lambda plan, t=t: sim.simulate_modulo_fixed(mp, theta, t, args.trials, plan),
                                exact))
        else:
            mp = ModuloParams(parse_pmf(args.pmf))
            for n in _int_list(args.block or "100", "--block"):
                conf = {"scheme": scheme, "pmf": mp.noise.probs.tolist(), "rate_helper": args.rate_helper,
                        "tau": args.tau, "n": n, "trials": args.trials}
                exact = (lambda n=n: sim.exact_overflow_modulo(mp, args.rate_helper, args.tau, n)) if args.exact else None
                configs.append((conf, lambda plan, n=n: sim.simulate_modulo_variable(
                    mp, args.rate_helper, args.tau, n, args.trials, plan), exact))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return configs


def cmd_simulate(args) -> int:
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    plan = sim.RngPlan(args.seed, args.workers)
    started = _now()
    records, summary_rows, failures = [], [], []
    for index, (conf, run, exact) in enumerate(_sim_configs(args)):
        # exact oracle first: an oversized type enumeration stops before any sampling
        exact_value = exact() if exact is not None else None
        result = run(plan)
        checks = dict(result.hard_checks)
        if args.power_policy == "strict" and args.scheme == "awgn-flash":
            checks["power_within_budget"] = result.realized_power_mean <= args.gamma
        # the record manifest omits timestamps and worker count so reruns are byte-identical
        manifest = RunManifest("simulate", {**conf, "power_policy": args.power_policy}, seed=args.seed)
        body = result.to_dict()
        body["hard_checks"] = checks
        if exact_value is not None:
            body["exact_error_probability"] = exact_value
        records.append(json.dumps({"index": index, "manifest": manifest.to_dict(with_times=False), "result": body},
                                  sort_keys=True, allow_nan=False))
        failures += [f"config {index}: {name}" for name, ok in checks.items() if not ok]
        est = result.exponent_estimate
        summary_rows.append((result.scheme, str(result.trials), str(result.block_length), str(result.errors_total),
                             result.error_rate, *result.ci95, est.value, est.lower,
                             str(est.censored).lower(), str(all(checks.values())).lower()))

    _write("".join(r + "\n" for r in records), args.out)
    summary_path = args.summary or (f"{args.out}.summary.csv" if args.out and args.out != "-" else None)
    if summary_path:
        run_manifest = RunManifest("simulate", {**_resolved(args), "workers": args.workers}, seed=args.seed,
                                   started=started, finished=_now())
        columns = {c: c in ("exponent", "exponent_lower") for c in SUMMARY_COLUMNS}
        Path(summary_path).write_text(_render_csv(columns, summary_rows, args.units, run_manifest), encoding="utf-8")
    if failures:
        for failure in failures:
            print(f"invariant failed: {failure}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        reports = verify.run_all(quick=args.quick, tamper=args.tamper)
    except KeyError as exc:
        raise UsageError(f"unknown suite {exc}") from exc
    text = "".join(r.line() + "\n" for r in reports)
    failed = [r.name for r in reports if not r.passed]
    text += "all suites passed\n" if not failed else f"failed: {', '.join(failed)}\n"
    _write(text, args.out)
    return EXIT_INVARIANT if failed else EXIT_OK


# -- parser ------------------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; command-line flags take precedence")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--units", choices=("nats", "bits"), default="nats")

    curves = argparse.ArgumentParser(add_help=False)
    curves.add_argument("--grid", help="sweep lo:hi:points")
    curves.add_argument("--emit-plotscript", metavar="FILE", help="also write a gnuplot script for the CSV")

    parser = _Parser(prog="flashhelp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exponent-awgn", parents=[common, curves], help="WSP and achievable exponents versus R")
    p.add_argument("--gamma", type=float, default=1.0, help="SNR P/sigma^2")
    p.add_argument("--rate-helper", type=float, default=0.5)
    p.add_argument("--tau", type=float, help="flash fraction (with --slack: explicit design)")
    p.add_argument("--slack", type=float, help="sphere slack s")
    p.set_defaults(func=cmd_exponent_awgn)

    p = sub.add_parser("exponent-modulo", parents=[common, curves], help="modulo-additive channel curves")
    p.add_argument("--pmf", required=False, help="noise PMF: comma list or file")
    p.add_argument("--axis", choices=("theta", "rate", "tau"), default="theta")
    p.add_argument("--rate-helper", type=float, default=0.3)
    p.set_defaults(func=cmd_exponent_modulo)

    p = sub.add_parser("exponent-mac", parents=[common, curves], help="helped MAC exponents on an (R1, R2) grid")
    p.add_argument("--gamma1", type=float, default=1.0)
    p.add_argument("--gamma2", type=float, default=1.0)
    p.add_argument("--rate-helper", type=float, default=0.2)
    p.set_defaults(func=cmd_exponent_mac)

    p = sub.add_parser("simulate", parents=[common], help="seeded Monte Carlo of a helper scheme")
    p.add_argument("scheme", choices=SIM_SCHEMES)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--rate-helper", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--slack", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--pmf", default="0.9,0.1")
    p.add_argument("--segment", help="segment length t, comma list for several configurations")
    p.add_argument("--block", help="block length n (modulo-variable), comma list allowed")
    p.add_argument("--summary", help="summary CSV path (default: OUT.summary.csv)")
    p.add_argument("--power-policy", choices=("report", "strict"), default="report")
    p.add_argument("--exact", action="store_true", help="attach the exact error probability (type enumeration)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="oracle-equivalence self-checks")
    p.add_argument("--quick", action="store_true", help="reduced grids and trial counts")
    p.add_argument("--tamper", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def _parse(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        values = read_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        action = known.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if action.const is True and action.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {raw!r}") from exc
        if action.choices and value not in action.choices:
            raise UsageError(f"bad value for {key}: {raw!r}")
        defaults[key] = value
    # reparse so explicit flags override the file
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(parser, argv)
        return args.func(args)
    except UsageError as exc:
        print(f"flashhelp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except prob.EnumerationGuardError as exc:
        print(f"flashhelp: resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except MemoryError:
        print("flashhelp: resource guard: out of memory", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())

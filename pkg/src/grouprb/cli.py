"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 problem too large for the
dense simulator, 4 degenerate fit (only with ``--strict``).
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from .config import load_spec, parse_value
from .errors import (
    ConfigError,
    InfeasibleSizeError,
    NonConvergenceError,
    UnsupportedSamplingError,
)
from .experiments import (
    emit_comparison,
    read_csv,
    refit_csv,
    run_experiment,
    write_outputs,
)
from .fitting import fidelity_from_fit
from .groups import CliffordGroup, MonomialGroup
from .tables import TABLES, reproduce_table
from .twirl import profile_for
from .walks import mixing_time

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DEGENERATE = 4

log = logging.getLogger("grouprb")

_GROUP_RE = re.compile(r"^\s*(mu|c|clifford)\s*[(:]\s*(\d+)\s*(?:[,:]\s*(\d+)\s*)?\)?\s*$", re.I)


def parse_group(text: str):
    """``MU(2,4)``, ``mu:2:4``, ``C(1)`` or ``clifford(2)``."""
    m = _GROUP_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse group {text!r}; use e.g. MU(2,4) or Clifford(1)")
    kind, a, b = m.group(1).lower(), int(m.group(2)), m.group(3)
    if kind == "mu":
        if b is None:
            raise ConfigError(f"MU groups need two parameters, MU(d,n); got {text!r}")
        try:
            return MonomialGroup(a, int(b))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if b is not None:
        raise ConfigError(f"Clifford groups take one parameter (qubits); got {text!r}")
    return CliffordGroup(a)


def _parse_scale(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--scale expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v)
    return out


def _print_summary(record) -> None:
    for rep in record.repetitions:
        est = rep.estimate
        print(f"repetition {rep.repetition}: F_avg in [{est.f_avg_min:.6f}, {est.f_avg_max:.6f}]"
              f"  true {rep.true_f_avg:.6f}  error {rep.error:.3e}")
    print(f"mean error {record.mean_error:.3e}  median {record.median_error:.3e}"
          f"  std dev {record.std_dev_error:.3e}  R={len(record.repetitions)}")


def cmd_run(args) -> int:
    spec = load_spec(args.config)
    if args.workers:
        spec.workers = args.workers
    record = run_experiment(spec, write=False)
    for kind, path in write_outputs(record).items():
        log.info("wrote %s %s", kind, path)
    _print_summary(record)
    if record.any_degenerate:
        log.warning("at least one fit was degenerate or unidentifiable")
        if args.strict:
            return EXIT_DEGENERATE
    return EXIT_OK


def cmd_reproduce(args) -> int:
    scale = _parse_scale(args.scale)
    report = reproduce_table(args.table, scale, outdir=args.outdir)
    if args.strict and not report.passed:
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = load_spec(args.config)
    out = args.output or spec.output_csv
    if out is None:
        raise ConfigError("compare needs output.csv in the config or --output")
    rows = emit_comparison(spec, csv_path=out)
    for r in rows:
        print(f"p={r.p:<6} {r.mode:<10} mean {r.mean_error:.3e}  median {r.median_error:.3e}"
              f"  sd {r.std_error:.3e}  R={r.R}")
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_mixing_time(args) -> int:
    group = parse_group(args.group)
    elements = group.enumerate(cap=args.cap)
    gens = group.generators(lazy=not args.non_lazy)
    eps_values = args.eps or [0.25]
    result = {"group": args.group, "order": len(elements), "generators": len(gens.elements), "t1": {}}
    for eps in eps_values:
        try:
            t = mixing_time(gens, elements, eps, step_cap=args.step_cap)
        except NonConvergenceError as exc:
            print(f"eps={eps}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        result["t1"][str(eps)] = t
        print(f"t1({eps}) = {t}")
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=2) + "\n")
    return EXIT_OK


def cmd_fit(args) -> int:
    fits = refit_csv(args.csv, args.order)
    profile, d = None, None
    if args.group:
        group = parse_group(args.group)
        profile, d = profile_for(group), group.d
    data = read_csv(args.csv)
    out = {}
    degenerate = False
    for r, fit in fits.items():
        entry = {
            "a0": fit.a0,
            "terms": [{"a": a, "lambda": lam} for a, lam in fit.terms],
            "residual_rms": fit.residual_rms,
            "degenerate": fit.degenerate,
            "unidentifiable": fit.unidentifiable,
            "points": int(len(data[r][0])),
        }
        if profile is not None:
            est = fidelity_from_fit(fit, profile, d)
            entry.update(F_e_min=est.f_e_min, F_e_max=est.f_e_max,
                         F_avg_min=est.f_avg_min, F_avg_max=est.f_avg_max)
        degenerate |= fit.degenerate or fit.unidentifiable
        out[str(r)] = entry
    text = json.dumps(out, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    if degenerate:
        log.warning("at least one fit was degenerate or unidentifiable")
        if args.strict:
            return EXIT_DEGENERATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grouprb", description="Randomized benchmarking over finite groups.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment from a config file")
    p.add_argument("config")
    p.add_argument("--strict", action="store_true", help="exit 4 when a fit is degenerate")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="rerun a benchmark table at desk scale")
    p.add_argument("table", help=f"one of {', '.join(TABLES)}")
    p.add_argument("--scale", action="append", metavar="KEY=VALUE",
                   help="override R, M, m_max, qubits, d, seed or workers")
    p.add_argument("--outdir", default=None, help="write per-row CSV and a figure here")
    p.add_argument("--strict", action="store_true", help="exit 4 when a tolerance check fails")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("compare", help="compare the three protocols over a p sweep")
    p.add_argument("config")
    p.add_argument("--output", default=None, help="CSV path (a PNG is written next to it)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("mixing-time", help="mixing times of the generator walk on a group")
    p.add_argument("group", help="e.g. MU(2,4) or Clifford(1)")
    p.add_argument("--eps", type=float, action="append")
    p.add_argument("--non-lazy", action="store_true", help="drop the identity from the generators")
    p.add_argument("--cap", type=int, default=20000, help="largest group to enumerate")
    p.add_argument("--step-cap", type=int, default=10000)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_mixing_time)

    p = sub.add_parser("fit", help="fit decay curves from a results CSV")
    p.add_argument("csv")
    p.add_argument("--order", type=int, default=1, choices=(1, 2))
    p.add_argument("--group", default=None, help="convert rates to fidelities for this group")
    p.add_argument("--json", default=None)
    p.add_argument("--strict", action="store_true", help="exit 4 when a fit is degenerate")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnsupportedSamplingError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleSizeError as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())

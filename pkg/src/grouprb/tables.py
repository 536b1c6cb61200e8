"""Desk-scale reruns of the published benchmark tables.

Each table is a sweep of :class:`ExperimentSpec` rows. The published runs used
far larger systems (d up to 1024, 5 or 10 qubits); here the same protocols run
on systems small enough for exact oracles, and each table carries a
tolerance check suited to that scale. Reference numbers are printed next to
the new ones for orientation only.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .config import ExperimentSpec
from .errors import ConfigError
from .experiments import run_experiment

SCALE_KEYS = ("R", "M", "m_max", "qubits", "d", "seed", "workers")
_STDOUT = object()  # resolved at call time so redirection works


@dataclass
class TableRow:
    label: str
    spec: ExperimentSpec
    reference_mean: float | None = None
    reference_spread: float | None = None
    record: object = None

    @property
    def mean_error(self) -> float:
        return self.record.mean_error

    @property
    def median_error(self) -> float:
        return self.record.median_error

    @property
    def std_dev_error(self) -> float:
        return self.record.std_dev_error


@dataclass
class TableCheck:
    description: str
    passed: bool
    detail: str


@dataclass
class TableReport:
    name: str
    title: str
    reference_setup: str
    rows: list
    checks: list = field(default_factory=list)
    reference_extra: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def find(self, **params) -> TableRow:
        """First row whose spec matches every given field."""
        for r in self.rows:
            if all(getattr(r.spec, k) == v for k, v in params.items()):
                return r
        raise KeyError(params)

    def format(self) -> str:
        ms = self.rows[0].spec.m_values if self.rows else []
        span = f", m={min(ms)}..{max(ms)}" if ms else ""
        out = [f"{self.name}: {self.title}{span}", f"  reference setup: {self.reference_setup}"]
        for line in self.reference_extra:
            out.append(f"  reference: {line}")
        out.append(f"  {'row':<24}{'mean err':>12}{'median err':>12}{'std dev':>12}{'reference':>12}")
        for r in self.rows:
            ref = f"{r.reference_mean:.3g}" if r.reference_mean is not None else "-"
            out.append(f"  {r.label:<24}{r.mean_error:>12.3e}{r.median_error:>12.3e}"
                       f"{r.std_dev_error:>12.3e}{ref:>12}")
        for c in self.checks:
            out.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.description}: {c.detail}")
        return "\n".join(out)


def _parse_scale(scale: dict | None) -> dict:
    scale = dict(scale or {})
    bad = sorted(set(scale) - set(SCALE_KEYS))
    if bad:
        raise ConfigError(f"unknown scale key(s) {', '.join(bad)}; valid: {', '.join(SCALE_KEYS)}")
    return scale


def _base(scale: dict, **kw) -> ExperimentSpec:
    spec = ExperimentSpec(
        repetitions=int(scale.get("R", 20)),
        master_seed=int(scale.get("seed", 2024)),
        workers=int(scale.get("workers", 1)),
        **kw,
    )
    if "m_max" in scale:
        spec.m_values = list(range(1, int(scale["m_max"]) + 1))
    if "M" in scale:
        spec.M = int(scale["M"])
    return spec.validate()


# --------------------------------------------------------------------------
# table definitions
# --------------------------------------------------------------------------


def _t1(scale):
    dims = scale.get("d", [4, 8])
    dims = dims if isinstance(dims, list) else [dims]
    rows = []
    for d in dims:
        for M in (100, 1000):
            spec = _base(scale, group_type="mu", d=int(d), n=8, noise_type="depolarize", p=0.9,
                         protocol="standard", m_values=list(range(1, 41)), M=M, fit_order=1)
            rows.append(TableRow(f"d={d} M={spec.M}", spec))
    report = TableReport(
        "t1", "MU(d,8), depolarizing noise p=0.9, state and effect |0><0|",
        "d in {64, 128, 1024}, M in {100, 1000}, 100 channels per row",
        rows,
        reference_extra=[
            "d=64   M=1000 mean 9.17e-3", "d=128  M=100  mean 6.08e-3", "d=128  M=1000 mean 5.17e-3",
            "d=1024 M=100  mean 9.17e-3", "d=1024 M=1000 mean 4.55e-3",
        ],
    )

    def check(rep):
        worst = max(r.mean_error for r in rep.rows)
        rep.checks.append(TableCheck("every row mean error < 2e-2", worst < 2e-2, f"worst {worst:.3e}"))

    return report, check


def _t2(scale):
    d = int(scale.get("d", 4))
    refs = {0.1: 3.90e-4, 0.2: 2.63e-4, 0.3: 3.19e-4, 0.4: 4.11e-4, 0.5: 4.71e-4}
    rows = []
    for a, ref in refs.items():
        spec = _base(scale, group_type="mu", d=d, n=8, noise_type="x_rotation", a=a,
                     protocol="standard", m_values=list(range(1, 21)), M=1000, isolate=True)
        rows.append(TableRow(f"a={a}", spec, ref))
    report = TableReport(
        "t2", f"MU({d},8), unitary X-rotation noise, sector-isolating states and effects",
        "10 qubits, M=1000, 100 channels per row", rows)

    def check(rep):
        err = rep.find(a=0.1).mean_error
        rep.checks.append(TableCheck("a=0.1 mean error < 5e-3", err < 5e-3, f"{err:.3e}"))

    return report, check


def _clifford_rows(scale, noise_type, entries):
    q = int(scale.get("qubits", 1))
    rows = []
    for p, b, M, ref, spread in entries:
        spec = _base(scale, group_type="clifford", qubits=q, noise_type=noise_type, p=p,
                     protocol="generator", b=b, m_values=list(range(1, 21)), M=M, fit_order=1)
        rows.append(TableRow(f"p={p} b={b} M={spec.M}", spec, ref, spread))
    return q, rows


def _t3(scale):
    q, rows = _clifford_rows(scale, "random_isometry", [
        (0.98, 10, 10, 5.49e-3, 1.38e-4),
        (0.95, 10, 100, 1.44e-3, 3.92e-4),
        (0.95, 5, 100, 1.52e-3, 7.94e-4),
        (0.95, 5, 20, 1.56e-3, 7.44e-4),
        (0.90, 10, 20, 3.20e-3, 1.58e-4),
        (0.80, 10, 50, 8.63e-3, 6.01e-4),
    ])
    report = TableReport(
        "t3", f"Clifford on {q} qubit(s), generator RB, identity mixed with a random channel",
        "5 qubits, 20 channels per row", rows)

    def check(rep):
        err = rep.find(p=0.95, b=10).mean_error
        rep.checks.append(TableCheck("p=0.95 b=10 within 10x of 1.44e-3", err < 1.44e-2, f"{err:.3e}"))

    return report, check


def _t4(scale):
    q, rows = _clifford_rows(scale, "random_isometry", [
        (0.70, 5, 100, 2.07e-2, 1.15e-3),
        (0.65, 5, 100, 2.29e-2, 1.95e-3),
        (0.60, 5, 100, 27.1e-2, 52.30e-3),
        (0.55, 5, 100, 44.5e-2, 67.30e-3),
    ])
    report = TableReport(
        "t4", f"Clifford on {q} qubit(s), generator RB in the low-fidelity regime",
        "5 qubits, 20 channels per row", rows)

    def check(rep):
        hi, lo = rep.find(p=0.7).mean_error, rep.find(p=0.55).mean_error
        rep.checks.append(TableCheck("error at p=0.55 exceeds error at p=0.7", lo > hi,
                                     f"{lo:.3e} vs {hi:.3e}"))

    return report, check


def _t5(scale):
    q, rows = _clifford_rows(scale, "haar_unitary_mix", [
        (0.98, 10, 100, 2.30e-3, 9.44e-4),
        (0.95, 10, 100, 1.15e-3, 9.19e-4),
        (0.90, 10, 100, 3.62e-3, 2.22e-4),
        (0.85, 10, 100, 6.67e-3, 39.4e-4),
        (0.80, 10, 100, 83.4e-3, 55.9e-4),
    ])
    report = TableReport(
        "t5", f"Clifford on {q} qubit(s), generator RB, identity mixed with a Haar unitary",
        "5 qubits, 20 channels per row", rows)

    def check(rep):
        for r in rep.rows:
            if r.spec.p >= 0.9:
                err = r.mean_error
                rep.checks.append(TableCheck(f"{r.label} within 10x of {r.reference_mean:.3g}",
                                             err < 10 * r.reference_mean, f"{err:.3e}"))

    return report, check


TABLES: dict[str, Callable] = {"t1": _t1, "t2": _t2, "t3": _t3, "t4": _t4, "t5": _t5}


def reproduce_table(name: str, scale: dict | None = None, outdir=None, stream=_STDOUT) -> TableReport:
    """Run one table and print it with its tolerance checks.

    ``scale`` overrides the desk defaults: ``R`` repetitions, ``M`` sequences
    per length, ``m_max``, ``qubits`` (Clifford tables), ``d``, ``seed``,
    ``workers``. With ``outdir`` a per-row CSV and a figure are written too.
    The report goes to ``stream`` (standard output by default, ``None`` to
    stay quiet).
    """
    if name not in TABLES:
        raise ConfigError(f"unknown table {name!r}; valid names: {', '.join(TABLES)}")
    scale = _parse_scale(scale)
    report, check = TABLES[name](scale)
    for row in report.rows:
        row.record = run_experiment(row.spec, write=False)
    check(report)
    if outdir is not None:
        _write_table(report, Path(outdir))
    if stream is _STDOUT:
        stream = sys.stdout
    if stream is not None:
        print(report.format(), file=stream)
    return report


def _write_table(report: TableReport, outdir: Path) -> None:
    from . import plotting

    outdir.mkdir(parents=True, exist_ok=True)
    lines = ["row,mean_error,median_error,std_dev_error,R,reference_mean"]
    for r in report.rows:
        ref = "" if r.reference_mean is None else repr(r.reference_mean)
        lines.append(f"{r.label},{r.mean_error!r},{r.median_error!r},{r.std_dev_error!r},"
                     f"{len(r.record.repetitions)},{ref}")
    (outdir / f"{report.name}.csv").write_text("\n".join(lines) + "\n")
    plotting.table_figure(report, outdir / f"{report.name}.png")


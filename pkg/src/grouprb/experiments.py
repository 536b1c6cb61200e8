"""End-to-end experiments: draw noise, run a protocol, fit, score.

One repetition draws a fresh noise instance, runs the chosen protocol, fits
the decay and compares the implied average fidelity with the true one. The
error is ``|F - F_hat|`` with ``F_hat`` the midpoint of the estimated range.

Randomness is split per repetition: repetition ``r`` derives its noise
generator and its sequence seeds from ``(master_seed, r)`` only, so runs with
different protocols but the same seed see the same noise draws.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channels import average_fidelity, entanglement_fidelity, make_noise
from .config import ExperimentSpec
from .errors import ConfigError
from .fitting import (
    DecayFit,
    FidelityEstimate,
    fidelity_from_fit,
    fidelity_from_labeled_rates,
    fit_decay,
    samples_from_arrays,
)
from .rb import RBConfig, run_rb
from .twirl import isolating_effect, isolating_state, profile_for

CSV_COLUMNS = ("m", "mean_fidelity", "std_err", "M", "repetition")
COMPARISON_COLUMNS = ("p", "mode", "mean_error", "median_error", "std_error", "R")
SECTORS = ("off_diagonal", "diagonal")


@dataclass
class RepetitionResult:
    repetition: int
    runs: dict  # sector label (or "all") -> RBRun
    fits: dict  # same keys -> DecayFit
    estimate: FidelityEstimate
    true_f_avg: float

    @property
    def error(self) -> float:
        return abs(self.true_f_avg - self.estimate.f_avg)

    @property
    def degenerate(self) -> bool:
        return any(f.degenerate or f.unidentifiable for f in self.fits.values())


@dataclass
class ResultRecord:
    spec: ExperimentSpec
    repetitions: list = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.repetitions])

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors))

    @property
    def std_dev_error(self) -> float:
        return float(np.std(self.errors))

    @property
    def any_degenerate(self) -> bool:
        return any(r.degenerate for r in self.repetitions)


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------


def _repetition_seeds(master_seed: int, r: int) -> tuple[np.random.Generator, list[int]]:
    ss = np.random.SeedSequence([master_seed, r])
    noise_ss, seq_ss = ss.spawn(2)
    seeds = [int(s) for s in seq_ss.generate_state(len(SECTORS) + 1)]
    return np.random.default_rng(noise_ss), seeds


def _draw_noise(spec: ExperimentSpec, rng: np.random.Generator):
    return make_noise(spec.noise_type, spec.dim, rng, p=spec.p, delta=spec.delta, a=spec.a)


def _rb_config(spec, group, noise, seed, rho=None, effect=None) -> RBConfig:
    return RBConfig(
        group=group,
        noise=noise,
        m_values=spec.m_values,
        M=spec.M,
        sampling=spec.sampling,
        rho=rho,
        effect=effect,
        walk_length=spec.walk_length,
        burn_in=spec.b,
        master_seed=seed,
    )


def default_fit_order(spec: ExperimentSpec) -> int:
    # With the default |0><0| state and effect only one sector is visible, so
    # one rate is all the data can resolve; two rates are opt-in.
    return spec.fit_order or 1


def run_repetition(spec: ExperimentSpec, r: int, group=None, profile=None) -> RepetitionResult:
    group = group or spec.build_group()
    profile = profile or profile_for(group)
    noise_rng, seeds = _repetition_seeds(spec.master_seed, r)
    noise = _draw_noise(spec, noise_rng)
    d = group.d
    true_f = average_fidelity(entanglement_fidelity(noise), d)
    if spec.isolate:
        runs, fits = {}, {}
        for label, seed in zip(SECTORS, seeds[1:]):
            cfg = _rb_config(spec, group, noise, seed, isolating_state(label, d), isolating_effect(label, d))
            runs[label] = run_rb(cfg)
            fits[label] = fit_decay(runs[label].samples(), 1)
        estimate = fidelity_from_labeled_rates({k: f.rates[0] for k, f in fits.items()}, profile, d)
    else:
        run = run_rb(_rb_config(spec, group, noise, seeds[0]))
        fit = fit_decay(run.samples(), default_fit_order(spec))
        runs, fits = {"all": run}, {"all": fit}
        estimate = fidelity_from_fit(fit, profile, d)
    return RepetitionResult(r, runs, fits, estimate, true_f)


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ResultRecord:
    """Run every repetition and, if ``write``, emit the configured files."""
    group = spec.build_group()
    profile = profile_for(group)

    def one(r):
        return run_repetition(spec, r, group, profile)

    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as pool:
            reps = list(pool.map(one, range(spec.repetitions)))
    else:
        reps = [one(r) for r in range(spec.repetitions)]
    record = ResultRecord(spec, reps)
    if write:
        write_outputs(record)
    return record


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _fit_dict(fit: DecayFit) -> dict:
    return {
        "a0": fit.a0,
        "terms": [{"a": a, "lambda": lam} for a, lam in fit.terms],
        "residual_rms": fit.residual_rms,
        "degenerate": fit.degenerate,
        "unidentifiable": fit.unidentifiable,
    }


def repetition_dict(rep: RepetitionResult) -> dict:
    est = rep.estimate
    out = {"repetition": rep.repetition}
    if set(rep.fits) == {"all"}:
        out.update(_fit_dict(rep.fits["all"]))
    else:
        out["sectors"] = {k: _fit_dict(f) for k, f in rep.fits.items()}
        out["a0"] = None
        out["terms"] = [{"a": a, "lambda": lam, "sector": k} for k, f in rep.fits.items() for a, lam in f.terms]
        out["residual_rms"] = max(f.residual_rms for f in rep.fits.values())
    out.update({
        "F_e_min": est.f_e_min,
        "F_e_max": est.f_e_max,
        "F_avg_min": est.f_avg_min,
        "F_avg_max": est.f_avg_max,
        "F_avg_width": est.width,
        "true_F_avg": rep.true_f_avg,
        "error": rep.error,
    })
    return out


def summary_dict(record: ResultRecord) -> dict:
    return {
        "spec": record.spec.to_dict(),
        "runs": [repetition_dict(r) for r in record.repetitions],
        "mean_error": record.mean_error,
        "median_error": record.median_error,
        "std_dev_error": record.std_dev_error,
        "R": len(record.repetitions),
    }


def csv_rows(record: ResultRecord, sector: str = "all") -> list[tuple]:
    rows = []
    for rep in record.repetitions:
        run = rep.runs[sector]
        for m, y, se in zip(run.m_values, run.means, run.std_errs):
            rows.append((m, float(y), float(se), run.M, rep.repetition))
    return rows


def write_csv(path, rows) -> None:
    # repr floats round-trip exactly, so refits from the file match the summary
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for m, y, se, M, r in rows:
            w.writerow((m, repr(y), repr(se), M, r))


def read_csv(path) -> dict:
    """Decay data per repetition: ``{repetition: (ms, means, std_errs, M)}``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ConfigError(f"{path}: expected header {','.join(CSV_COLUMNS)}, got {header}")
        data: dict = {}
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                m, y, se, M, r = int(row[0]), float(row[1]), float(row[2]), int(row[3]), int(row[4])
            except (ValueError, IndexError):
                raise ConfigError(f"{path}:{lineno}: malformed row {row}") from None
            ms, ys, ses, _ = data.setdefault(r, ([], [], [], M))
            ms.append(m)
            ys.append(y)
            ses.append(se)
    return {r: (np.array(ms), np.array(ys), np.array(ses), M) for r, (ms, ys, ses, M) in data.items()}


def refit_csv(path, order: int = 1) -> dict:
    return {
        r: fit_decay(samples_from_arrays(ms, ys, ses, M), order)
        for r, (ms, ys, ses, M) in read_csv(path).items()
    }


def sector_path(path, sector: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.{sector}{path.suffix}")


def write_outputs(record: ResultRecord) -> dict:
    """Write the CSV(s), summary JSON and figure named by the experiment."""
    from . import plotting

    spec = record.spec
    written = {}
    if spec.output_csv:
        if spec.isolate:
            for sector in SECTORS:
                p = sector_path(spec.output_csv, sector)
                write_csv(p, csv_rows(record, sector))
                written[f"csv.{sector}"] = p
        else:
            write_csv(spec.output_csv, csv_rows(record))
            written["csv"] = Path(spec.output_csv)
    if spec.output_json:
        Path(spec.output_json).write_text(json.dumps(summary_dict(record), indent=2) + "\n")
        written["json"] = Path(spec.output_json)
    figure = spec.output_figure
    if figure is None and spec.output_csv:
        figure = str(Path(spec.output_csv).with_suffix(".png"))
    if figure:
        plotting.decay_figure(record, figure)
        written["figure"] = Path(figure)
    return written


# --------------------------------------------------------------------------
# protocol comparison
# --------------------------------------------------------------------------


@dataclass
class ComparisonRow:
    p: float
    mode: str
    mean_error: float
    median_error: float
    std_error: float
    R: int


def emit_comparison(spec: ExperimentSpec, csv_path=None, figure_path=None) -> list[ComparisonRow]:
    """Sweep ``p_values`` for each protocol in ``modes``.

    ``std_error`` is the sample standard deviation of the per-repetition
    errors (the spread of the error, not of its mean). Every mode sees the
    same noise draws for a given p.
    """
    if not spec.p_values:
        raise ConfigError("compare needs p_values")
    rows = []
    for p in spec.p_values:
        for mode in spec.modes:
            sub = replace(spec, p=float(p), protocol=mode, output_csv=None, output_json=None,
                          output_figure=None).validate()
            errs = run_experiment(sub, write=False).errors
            R = len(errs)
            rows.append(ComparisonRow(float(p), mode, float(np.mean(errs)), float(np.median(errs)),
                                      float(np.std(errs, ddof=1)) if R > 1 else 0.0, R))
    csv_path = csv_path or spec.output_csv
    if csv_path:
        Path(csv_path).write_text(comparison_csv(rows))
        from . import plotting

        plotting.comparison_figure(rows, figure_path or spec.output_figure
                                   or str(Path(csv_path).with_suffix(".png")))
    return rows


def comparison_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_COLUMNS)
    for row in rows:
        w.writerow((repr(row.p), row.mode, repr(row.mean_error), repr(row.median_error),
                    repr(row.std_error), row.R))
    return buf.getvalue()

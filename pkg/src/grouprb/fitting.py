"""Separable least-squares fits of RB decay curves ``a0 + sum_k a_k lam_k**m``.

For fixed rates the amplitudes enter linearly, so the residual is minimized
over the rates only (variable projection): a coarse grid picks the basin,
golden-section search refines it (plus a joint Nelder-Mead polish for two
rates). Rates are restricted to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .channels import average_fidelity
from .twirl import IrrepProfile, fidelity_bounds

SINGLE_GRID = 512
DOUBLE_GRID = 64
GOLDEN_TOL = 1e-12
COORD_TOL = 1e-10
COORD_SWEEPS = 50
COLLAPSE_GAP = 1e-3
# a term whose amplitude is this small relative to the data spread is not identifiable
AMPLITUDE_TOL = 1e-6

_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DecaySample:
    m: int
    mean: float
    std_err: float = 0.0
    M: int = 1


@dataclass(frozen=True)
class DecayFit:
    a0: float
    terms: tuple  # ((a, lam), ...) sorted by descending lam
    residual_rms: float
    order: int
    degenerate: bool = False
    unidentifiable: bool = False

    @property
    def rates(self) -> list[float]:
        return [lam for _, lam in self.terms]

    def predict(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        out = np.full(m.shape, self.a0)
        for a, lam in self.terms:
            out = out + a * lam**m
        return out


@dataclass(frozen=True)
class FidelityEstimate:
    f_e_min: float
    f_e_max: float
    f_avg_min: float
    f_avg_max: float
    rates: tuple = field(default=())

    @property
    def f_avg(self) -> float:
        """Midpoint of the average-fidelity range."""
        return 0.5 * (self.f_avg_min + self.f_avg_max)

    @property
    def width(self) -> float:
        return self.f_avg_max - self.f_avg_min


def _arrays(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ms = np.array([s.m for s in samples], dtype=float)
    ys = np.array([s.mean for s in samples], dtype=float)
    se = np.array([s.std_err for s in samples], dtype=float)
    if len(np.unique(ms)) != len(ms):
        raise ValueError("sequence lengths in a decay dataset must be distinct")
    return ms, ys, se


def samples_from_arrays(ms, means, std_errs=None, M=1) -> list[DecaySample]:
    if std_errs is None:
        std_errs = np.zeros(len(ms))
    return [DecaySample(int(m), float(y), float(s), int(M)) for m, y, s in zip(ms, means, std_errs)]


def _weights(se: np.ndarray, weighted: bool) -> np.ndarray:
    # zero standard errors (e.g. noiseless data) fall back to uniform weights
    if weighted and np.all(se > 0):
        w = 1.0 / se**2
        return w / w.mean()
    return np.ones_like(se)


def _project(ms, ys, sw, lams) -> tuple[float, np.ndarray]:
    """Weighted residual sum of squares and coefficients for fixed rates."""
    cols = [np.ones_like(ms)] + [np.power(lam, ms) for lam in lams]
    x = np.stack(cols, axis=1) * sw[:, None]
    coef, *_ = np.linalg.lstsq(x, ys * sw, rcond=None)
    r = x @ coef - ys * sw
    return float(r @ r), coef


def _golden(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _rms(ms, ys, a0, terms) -> float:
    pred = np.full_like(ys, a0)
    for a, lam in terms:
        pred = pred + a * lam**ms
    return float(np.sqrt(np.mean((pred - ys) ** 2)))


def _constant_fit(ms, ys, order=1) -> DecayFit:
    a0 = float(np.mean(ys))
    return DecayFit(a0, ((0.0, 1.0),), _rms(ms, ys, a0, ()), order=1,
                    degenerate=order > 1, unidentifiable=True)


def _is_flat(ys) -> bool:
    return np.ptp(ys) <= 1e-12 * max(1.0, float(np.max(np.abs(ys))))


def fit_single_decay(samples: Sequence[DecaySample], weighted: bool = True) -> DecayFit:
    """Fit ``a0 + a1 lam**m``.

    Constant data carry no rate information; they return ``a1 = 0`` with
    ``lam = 1`` and ``unidentifiable=True``.
    """
    if len(samples) < 4:
        raise ValueError(f"single-exponential fit needs at least 4 points, got {len(samples)}")
    ms, ys, se = _arrays(samples)
    if _is_flat(ys):
        return _constant_fit(ms, ys)
    sw = np.sqrt(_weights(se, weighted))
    grid = np.linspace(0.0, 1.0, SINGLE_GRID)
    rss = np.array([_project(ms, ys, sw, [lam])[0] for lam in grid])
    i = int(np.argmin(rss))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, SINGLE_GRID - 1)]
    lam = _golden(lambda x: _project(ms, ys, sw, [x])[0], lo, hi, GOLDEN_TOL)
    _, coef = _project(ms, ys, sw, [lam])
    a0, a1 = float(coef[0]), float(coef[1])
    return DecayFit(a0, ((a1, float(lam)),), _rms(ms, ys, a0, [(a1, lam)]), order=1)


def fit_double_decay(samples: Sequence[DecaySample], weighted: bool = True) -> DecayFit:
    """Fit ``a0 + a1 lam1**m + a2 lam2**m`` with ``lam1 > lam2``.

    When the two rates end up closer than 1e-3, or one of the amplitudes
    vanishes, the data do not resolve two rates; the result is then the
    single-exponential fit with ``degenerate=True``.
    """
    if len(samples) < 6:
        raise ValueError(f"double-exponential fit needs at least 6 points, got {len(samples)}")
    ms, ys, se = _arrays(samples)
    if _is_flat(ys):
        return _constant_fit(ms, ys, order=2)
    sw = np.sqrt(_weights(se, weighted))

    def rss(l1, l2):
        return _project(ms, ys, sw, [l1, l2])[0]

    grid = np.linspace(0.0, 1.0, DOUBLE_GRID)
    best = (math.inf, 0.0, 0.0)
    # lexicographic scan: ties resolve to the smallest (lam1, lam2)
    for i in range(DOUBLE_GRID):
        for j in range(i):
            r = rss(grid[i], grid[j])
            if r < best[0]:
                best = (r, grid[i], grid[j])
    _, l1, l2 = best
    step = grid[1] - grid[0]
    for _ in range(COORD_SWEEPS):
        new1 = _golden(lambda x: rss(x, l2), max(l2, l1 - step), min(1.0, l1 + step), GOLDEN_TOL)
        new2 = _golden(lambda x: rss(new1, x), max(0.0, l2 - step), min(new1, l2 + step), GOLDEN_TOL)
        moved = max(abs(new1 - l1), abs(new2 - l2))
        l1, l2 = new1, new2
        if moved < COORD_TOL:
            break
    # coordinate steps crawl along the narrow valley of close rates; polish jointly
    polished = minimize(
        lambda x: rss(x[0], x[1]) if 0.0 <= x[1] <= x[0] <= 1.0 else math.inf,
        [l1, l2], method="Nelder-Mead",
        options={"xatol": GOLDEN_TOL, "fatol": 0.0, "maxiter": 20000},
    )
    if polished.fun < rss(l1, l2):
        l1, l2 = (float(x) for x in polished.x)
    _, coef = _project(ms, ys, sw, [l1, l2])
    a0, a1, a2 = (float(c) for c in coef)
    spread = float(np.ptp(ys))
    if abs(l1 - l2) < COLLAPSE_GAP or min(abs(a1), abs(a2)) < AMPLITUDE_TOL * spread:
        single = fit_single_decay(samples, weighted)
        return DecayFit(single.a0, single.terms, single.residual_rms, order=1,
                        degenerate=True, unidentifiable=single.unidentifiable)
    terms = ((a1, float(l1)), (a2, float(l2)))
    return DecayFit(a0, terms, _rms(ms, ys, a0, terms), order=2)


def fit_decay(samples, order: int = 1, weighted: bool = True) -> DecayFit:
    if order == 1:
        return fit_single_decay(samples, weighted)
    if order == 2:
        return fit_double_decay(samples, weighted)
    raise ValueError(f"fit order must be 1 or 2, got {order}")


def fidelity_from_fit(fit: DecayFit, profile: IrrepProfile, d: int | None = None) -> FidelityEstimate:
    """Entanglement- and average-fidelity range implied by the fitted rates.

    A single rate is taken to be the eigenvalue of every non-trivial block
    (a point estimate). With one rate per block the unknown block labels
    give a range, see :func:`grouprb.twirl.fidelity_bounds`.
    """
    d = d or int(round(math.sqrt(profile.total)))
    blocks = profile.nontrivial
    rates = sorted(fit.rates, reverse=True)
    if len(rates) > len(blocks):
        raise ValueError(f"fit has {len(rates)} rates but the profile only {len(blocks)} non-trivial blocks")
    if len(rates) == 1:
        rates = rates * len(blocks)
    elif len(rates) != len(blocks):
        raise ValueError(f"cannot pair {len(rates)} rates with {len(blocks)} blocks")
    f_min, f_max = fidelity_bounds([1.0] + rates, profile)
    return FidelityEstimate(f_min, f_max, average_fidelity(f_min, d), average_fidelity(f_max, d),
                            tuple(rates))


def fidelity_from_labeled_rates(rates: dict, profile: IrrepProfile, d: int) -> FidelityEstimate:
    """Point estimate when every rate is known to belong to a labelled block.

    This is the case for data taken with sector-isolating states and effects.
    """
    total = 1.0
    for block in profile.nontrivial:
        if block.label not in rates:
            raise ValueError(f"no rate for block {block.label!r}")
        total += block.dim * block.multiplicity * rates[block.label]
    f_e = total / profile.total
    f_avg = average_fidelity(f_e, d)
    return FidelityEstimate(f_e, f_e, f_avg, f_avg, tuple(rates[b.label] for b in profile.nontrivial))

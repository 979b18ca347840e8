"""Sweeps over cavity size and family parameter, power-law fits, closed-form
comparisons and the small-D brute-force equivalence suite.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import HLSimError, InvalidDimensionError, InvalidParameterError, ValidationError
from .model import Family, ModelSpec
from .observables import (
    BeamObservables,
    beam_observables,
    coherence,
    coherence_at,
    condition4_deltas,
    mandel_q,
    stationary,
)
from .oracle import DenseLaser

log = logging.getLogger(__name__)

DEFAULT_FIT_DIMS = (50, 100, 200, 400, 800)
LAMBDA_GRID = tuple(round(0.05 * i, 10) for i in range(21))
Q_GRID = tuple(round(-1.0 + 0.1 * i, 10) for i in range(21))
ORACLE_PANEL = ((Family.LAMBDA, 0.0), (Family.LAMBDA, 0.25), (Family.LAMBDA, 0.5),
                (Family.LAMBDA, 1.0), (Family.REGULAR_PUMP, -0.9), (Family.REGULAR_PUMP, -0.5),
                (Family.REGULAR_PUMP, 0.5))
HL_PREFACTOR = 2.9748


@dataclass
class SweepRecord:
    model: ModelSpec
    mu: float
    observables: BeamObservables | None
    runtime_ms: int
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.observables is not None and self.observables.ok

    def as_row(self) -> dict:
        obs = self.observables
        row = {"family": self.model.family.value, "param": self.model.param, "dim": self.model.dim,
               "mu": self.mu}
        for key in ("flux", "coherence", "peak_omega", "linewidth_gap", "linewidth_flux",
                    "mandel_q"):
            row[key] = getattr(obs, key) if obs is not None else float("nan")
        row["runtime_ms"] = self.runtime_ms
        row["flags"] = list(self.flags) + ([f"error:{self.error}"] if self.error else [])
        return row


@dataclass(frozen=True)
class FitResult:
    exponent: float
    log_prefactor: float
    r_squared: float
    point_count: int
    excluded: tuple = ()

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get("HLSIM_WORKERS", "1") or 1)
    return max(1, int(workers))


def _parallel_map(func, items, workers):
    workers = resolve_workers(workers)
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def evaluate(model: ModelSpec) -> SweepRecord:
    """Observables for one model; numerical failures are captured in the record."""
    start = time.perf_counter()
    try:
        obs = beam_observables(model)
    except HLSimError as exc:
        log.warning("%s failed: %s", model.label(), exc)
        return SweepRecord(model, float("nan"), None,
                           int(round(1000 * (time.perf_counter() - start))),
                           ["solver-failure"], str(exc))
    return SweepRecord(model, obs.mu, obs, int(round(1000 * (time.perf_counter() - start))),
                       list(obs.flags))


def sweep_dimension(family, param: float, dims, workers: int | None = None) -> list[SweepRecord]:
    dims = [int(d) for d in dims]
    if not dims:
        raise ValidationError("dimension list is empty")
    if any(d < 8 for d in dims) or any(b <= a for a, b in zip(dims, dims[1:])):
        raise InvalidDimensionError(f"dimensions must be ascending and >= 8, got {dims}")
    models = [ModelSpec(Family.parse(family), param, d) for d in dims]
    return _parallel_map(evaluate, models, workers)


def power_law_fit(x, y) -> FitResult:
    """Least squares of ``ln y = exponent * ln x + log_prefactor``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if len(lx) < 4:
        raise ValidationError(f"power-law fit needs at least 4 points, got {len(lx)}")
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, icept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ np.array([slope, icept])
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(icept), min(max(r2, 0.0), 1.0), len(lx))


def fit_power_law(records) -> FitResult:
    """Fit coherence against mean excitation number over the usable records."""
    good = [r for r in records if r.ok]
    excluded = tuple(r.model.label() for r in records if not r.ok)
    if excluded:
        log.warning("excluded from fit: %s", ", ".join(excluded))
    fit = power_law_fit([r.mu for r in good], [r.observables.coherence for r in good])
    return FitResult(fit.exponent, fit.log_prefactor, fit.r_squared, fit.point_count, excluded)


def analytic_reference(family, param: float) -> tuple[float, float]:
    """Large-D closed forms ``(C / C_0, Q)``."""
    family = Family.parse(family)
    param = float(param)
    if family is Family.LAMBDA:
        return 1.0 / (2.0 * (param - 0.5) ** 2 + 0.5), 2.0 * param * (param - 1.0)
    if param == -2.0:
        raise InvalidParameterError("q = -2 is a pole of the coherence formula")
    return 1.0 / (1.0 + 0.5 * param) ** 2, param


@dataclass(frozen=True)
class ParamRow:
    param: float
    coh_ratio: float
    mandel_q: float
    coh: float
    flux: float
    flags: tuple[str, ...] = ()

    def as_row(self) -> dict:
        return {"param": self.param, "coh_ratio": self.coh_ratio, "mandel_q": self.mandel_q,
                "coh": self.coh, "flux": self.flux, "flags": list(self.flags)}


def sweep_parameter(family, dim: int, params, workers: int | None = None) -> list[ParamRow]:
    """Coherence (normalized to the zero-parameter member) and Mandel-Q across a grid."""
    family = Family.parse(family)
    params = [float(p) for p in params]
    if not params:
        raise ValidationError("parameter grid is empty")
    if 0.0 not in params:
        raise ValidationError("parameter grid must include 0 to define the reference coherence")
    models = [ModelSpec(family, p, dim) for p in params]
    records = _parallel_map(evaluate, models, workers)
    ref = records[params.index(0.0)]
    if not ref.ok:
        raise HLSimError(f"reference member failed: {ref.error or ref.flags}")
    c0 = ref.observables.coherence
    rows = []
    for p, rec in zip(params, records):
        obs = rec.observables
        if obs is None:
            rows.append(ParamRow(p, float("nan"), float("nan"), float("nan"), float("nan"),
                                 tuple(rec.flags)))
            continue
        rows.append(ParamRow(p, obs.coherence / c0, obs.mandel_q, obs.coherence, obs.flux,
                             tuple(rec.flags)))
    return rows


def _rel(a: float, b: float, floor: float = 1e-6) -> float:
    return abs(a - b) / max(abs(b), floor)


def oracle_suite(dim: int, panel=ORACLE_PANEL) -> list[dict]:
    """Sector results against the dense brute force for a panel of models.

    Each row carries the relative deviations of the stationary populations,
    the coherence and Mandel-Q; ``max_dev`` is their maximum.
    """
    if not 2 <= int(dim) <= 12:
        raise InvalidDimensionError(f"oracle suite runs at 2 <= D <= 12, got {dim}")
    rows = []
    for family, param in panel:
        model = ModelSpec(family, param, dim)
        row = {"family": model.family.value, "param": model.param, "dim": model.dim}
        try:
            dense = DenseLaser(model)
            laser = stationary(model)
            dense_pop = np.diag(dense.rho)
            row["dev_rho"] = float(np.max(np.abs(laser.rho - dense_pop)) / np.max(dense_pop))
            coh, peak = coherence(laser)
            row["dev_coherence"] = _rel(coh, dense.coherence_at(peak))
            row["dev_mandel_q"] = _rel(mandel_q(laser), dense.mandel_q())
            row["max_dev"] = max(row["dev_rho"], row["dev_coherence"], row["dev_mandel_q"])
            row["error"] = ""
        except HLSimError as exc:
            row.update(dev_rho=float("nan"), dev_coherence=float("nan"),
                       dev_mandel_q=float("nan"), max_dev=float("inf"), error=str(exc))
        rows.append(row)
    return rows


def condition4_trend(family, param: float, dims, window_factor: float = 1.0) -> list[dict]:
    """Condition-4 deviations across cavity sizes; ``scaled_delta_g2 = delta_g2 * sqrt(C)``."""
    rows = []
    for d in dims:
        model = ModelSpec(Family.parse(family), param, d)
        d1, d2, window = condition4_deltas(model, window_factor)
        coh = coherence_at(model, 0.0)
        rows.append({"dim": model.dim, "mu": stationary(model).mu, "coherence": coh,
                     "window": window, "delta_g1": d1, "delta_g2": d2,
                     "scaled_delta_g2": d2 * math.sqrt(coh)})
    return rows


def no_growth(values, slack: float = 0.05) -> bool:
    """True when no value exceeds its predecessor by more than ``slack`` (relative)."""
    values = list(values)
    return all(b <= a * (1.0 + slack) for a, b in zip(values, values[1:]))

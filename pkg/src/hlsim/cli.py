"""Command-line entry point.

Exit codes: 0 success, 2 validation error (including bad flags), 3 numerical
or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, harness, linalg
from .errors import HLSimError, ValidationError
from .model import Family, ModelSpec, steady_distribution
from .observables import (
    beam_observables,
    coherence_at,
    g1_correlation,
    g2_correlation,
    ideal_references,
    stationary,
    WINDOW_FACTOR,
)
from .io import write_table

log = logging.getLogger("hlsim")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

OBSERVABLE_COLUMNS = ["flux", "coherence", "peak_omega", "linewidth_gap", "linewidth_flux",
                      "mandel_q", "mu", "flags"]
SWEEP_PARAM_COLUMNS = ["param", "coh_ratio", "mandel_q", "coh", "flux", "flags"]

DEFAULTS = {
    "family": "lambda",
    "param": 0.0,
    "dim": None,
    "dims": None,
    "grid": None,
    "kind": "both",
    "window_factor": WINDOW_FACTOR,
    "null_shift": linalg.NULL_SHIFT_SCALE,
    "format": "csv",
    "out": None,
    "workers": None,
}

COMMAND_DEFAULTS = {
    "sweep-dim": {"dims": "50,100,200,400,800"},
    "fit": {"dims": "50,100,200,400,800"},
    "condition4": {"dims": "32,64,128,256"},
    "oracle": {"dim": 8},
    "spectrum": {"grid": "-5:5:0.25"},
    "correlations": {"grid": "0:4:0.1"},
}


def parse_grid(text: str) -> list[float]:
    """``start:stop:step``, endpoints included within half a step."""
    try:
        start, stop, step = (float(p) for p in str(text).split(":"))
    except ValueError:
        raise ValidationError(f"grid must look like start:stop:step, got {text!r}") from None
    if step == 0 or (stop - start) * step < 0:
        raise ValidationError(f"grid {text!r} is empty")
    count = int(np.floor((stop - start) / step + 0.5)) + 1
    values = [start + i * step for i in range(count)]
    return [round(v, 12) + 0.0 for v in values]


def parse_dims(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    try:
        dims = [int(t) for t in items]
    except ValueError:
        raise ValidationError(f"dimension list must be comma-separated integers, got {text!r}") from None
    if not dims:
        raise ValidationError("dimension list is empty")
    return dims


@dataclass
class RunConfig:
    command: str
    family: str = "lambda"
    param: float = 0.0
    dim: int | None = None
    dims: list[int] = field(default_factory=list)
    grid: list[float] = field(default_factory=list)
    kind: str = "both"
    window_factor: float = WINDOW_FACTOR
    null_shift: float = linalg.NULL_SHIFT_SCALE
    format: str = "csv"
    out: str | None = None
    workers: int | None = None

    def model(self) -> ModelSpec:
        if self.dim is None:
            raise ValidationError(f"{self.command} needs --dim")
        return ModelSpec(Family.parse(self.family), self.param, self.dim)

    def hashed(self) -> dict:
        """Settings that determine the data (output location and parallelism excluded)."""
        data = asdict(self)
        for key in ("out", "workers", "format", "command"):
            data.pop(key)
        return data


def _build_config(ns: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS)
    values.update(COMMAND_DEFAULTS.get(ns.command, {}))
    if ns.config:
        try:
            with open(ns.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config file {ns.config}: {exc}") from None
        if not isinstance(from_file, dict):
            raise ValidationError("config file must hold a flat JSON object")
        from_file = {k.replace("-", "_"): v for k, v in from_file.items()}
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update(from_file)
    for key in DEFAULTS:
        flag = getattr(ns, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(command=ns.command)
    try:
        cfg.family = Family.parse(values["family"]).value
        cfg.param = float(values["param"])
        cfg.dim = None if values["dim"] is None else int(values["dim"])
        cfg.dims = parse_dims(values["dims"]) if values["dims"] is not None else []
        cfg.grid = parse_grid(values["grid"]) if values["grid"] is not None else []
        cfg.kind = values["kind"]
        cfg.window_factor = float(values["window_factor"])
        cfg.null_shift = float(values["null_shift"])
        cfg.format = values["format"]
        cfg.out = values["out"]
        cfg.workers = harness.resolve_workers(values["workers"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad option value: {exc}") from None
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.format not in ("csv", "json"):
        raise ValidationError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.kind not in ("g1", "g2", "both"):
        raise ValidationError(f"kind must be g1, g2 or both, got {cfg.kind!r}")
    if not cfg.window_factor > 0:
        raise ValidationError("window factor must be positive")
    if not 0 < cfg.null_shift < 1:
        raise ValidationError("null-vector shift scale must lie in (0, 1)")
    needs_model = {"steady", "observables", "spectrum", "correlations"}
    if cfg.command in needs_model:
        cfg.model()
    if cfg.command == "sweep-param":
        if cfg.dim is None:
            raise ValidationError("sweep-param needs --dim")
        if not cfg.grid:
            raise ValidationError("sweep-param needs --grid")
        for p in cfg.grid:
            ModelSpec(Family.parse(cfg.family), p, cfg.dim)
    if cfg.command in ("sweep-dim", "fit", "condition4"):
        for d in cfg.dims:
            ModelSpec(Family.parse(cfg.family), cfg.param, d)
    if cfg.command == "oracle" and not 2 <= (cfg.dim or 0) <= 12:
        raise ValidationError("oracle runs at 2 <= D <= 12")


# --- commands ----------------------------------------------------------------

def _steady(cfg):
    model = cfg.model()
    ansatz = steady_distribution(model.dim).probs
    laser = stationary(model)
    return [{"n": n, "prob": float(laser.rho[n]), "ansatz": float(ansatz[n])}
            for n in range(model.dim)], None


def _observables(cfg):
    obs = beam_observables(cfg.model())
    return [obs.as_row()], OBSERVABLE_COLUMNS


def _spectrum(cfg):
    model = cfg.model()
    laser = stationary(model)
    ell = laser.linewidth_gap
    coh0 = coherence_at(laser, 0.0)
    ell_flux = 4.0 * laser.flux / coh0
    rows = []
    for u in cfg.grid:
        omega = u * ell
        _, _, p_ideal = ideal_references(laser.flux, ell_flux, 0.0, omega)
        rows.append({"omega_over_linewidth": u, "omega": omega,
                     "coherence": coherence_at(laser, omega),
                     "ideal": 2.0 * np.pi * p_ideal})
    return rows, None


def _correlations(cfg):
    model = cfg.model()
    laser = stationary(model)
    taus = np.asarray(cfg.grid) / laser.linewidth_gap
    ell_flux = 4.0 * laser.flux / coherence_at(laser, 0.0)
    rows = [{"tau": float(t)} for t in taus]
    if cfg.kind in ("g1", "both"):
        g1 = g1_correlation(laser, taus)
        for row, t, v in zip(rows, taus, g1.values):
            row["g1"] = float(v)
            row["g1_ideal"] = ideal_references(laser.flux, ell_flux, t, 0.0)[0]
    if cfg.kind in ("g2", "both"):
        for row, v in zip(rows, g2_correlation(laser, taus).values):
            row["g2"] = float(v)
    return rows, None


def _sweep_dim(cfg):
    recs = harness.sweep_dimension(cfg.family, cfg.param, cfg.dims, cfg.workers)
    return [r.as_row() for r in recs], None


def _sweep_param(cfg):
    rows = harness.sweep_parameter(cfg.family, cfg.dim, cfg.grid, cfg.workers)
    return [r.as_row() for r in rows], SWEEP_PARAM_COLUMNS


def _fit(cfg):
    recs = harness.sweep_dimension(cfg.family, cfg.param, cfg.dims, cfg.workers)
    fit = harness.fit_power_law(recs)
    log.info("exponent %.4f, prefactor %.4g, R^2 %.6f", fit.exponent, fit.prefactor, fit.r_squared)
    return [{"family": cfg.family, "param": cfg.param, "exponent": fit.exponent,
             "log_prefactor": fit.log_prefactor, "prefactor": fit.prefactor,
             "r_squared": fit.r_squared, "point_count": fit.point_count,
             "excluded": list(fit.excluded)}], None


def _oracle(cfg):
    return harness.oracle_suite(cfg.dim), None


def _condition4(cfg):
    return harness.condition4_trend(cfg.family, cfg.param, cfg.dims, cfg.window_factor), None


COMMANDS = {
    "steady": (_steady, "cavity populations (stationary and sin^4 ansatz)"),
    "observables": (_observables, "flux, coherence, linewidths and Mandel-Q of one model"),
    "spectrum": (_spectrum, "coherence spectrum 2*pi*P(omega); grid in units of the linewidth"),
    "correlations": (_correlations, "g1/g2 correlation series; grid in units of 1/linewidth"),
    "sweep-dim": (_sweep_dim, "observables across cavity sizes"),
    "sweep-param": (_sweep_param, "coherence ratio and Mandel-Q across a parameter grid"),
    "fit": (_fit, "power-law fit of coherence against mean excitation number"),
    "oracle": (_oracle, "dense brute-force comparison at small D"),
    "condition4": (_condition4, "deviations of g1/g2 from the ideal beam across sizes"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hlsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hlsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat JSON file of option values; flags override it")
        p.add_argument("--family", choices=["lambda", "q"])
        p.add_argument("--param", type=float, help="lambda, or the pump Mandel-Q q")
        p.add_argument("--dim", type=int, help="cavity dimension D")
        if name in ("sweep-dim", "fit", "condition4"):
            p.add_argument("--dims", help="comma-separated cavity dimensions")
        if name in ("sweep-param", "spectrum", "correlations"):
            p.add_argument("--grid", help="start:stop:step, inclusive")
        if name == "correlations":
            p.add_argument("--kind", choices=["g1", "g2", "both"])
        if name == "condition4":
            p.add_argument("--window-factor", dest="window_factor", type=float)
        p.add_argument("--null-shift", dest="null_shift", type=float,
                       help="inverse-iteration shift relative to the largest diagonal entry")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--workers", type=int, help="parallel workers (env HLSIM_WORKERS)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _attach_values(argv: list[str]) -> list[str]:
    # negative grids such as ``-1:0:0.1`` would otherwise be read as flags
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--grid", "--param") and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def run_cli(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parser.parse_args(_attach_values(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _build_config(ns)
    except ValidationError as exc:
        print(f"hlsim {ns.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    linalg.NULL_SHIFT_SCALE = cfg.null_shift
    handler = COMMANDS[cfg.command][0]
    try:
        rows, columns = handler(cfg)
        write_table(rows, cfg.format, cfg.out, columns=columns, config=cfg.hashed(),
                    command=cfg.command)
    except ValidationError as exc:
        print(f"hlsim {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (HLSimError, ArithmeticError, OSError) as exc:
        print(f"hlsim {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

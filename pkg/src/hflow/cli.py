"""Command-line entry point.

Subcommands::

    hflow simulate         --config run.json [--out-dir DIR]
    hflow check-criterion  --config run.json
    hflow sweep            --config sweep.json [--out-dir DIR]
    hflow concavity-check  --csv samples.csv --theta 0.5

A run config is JSON with required keys ``grid.nx``, ``grid.ny``, ``h0`` and
``initial_data.modes`` (rows ``[kx, ky, c1, c2, c3]``).  Optional keys:
``grid.lx``/``grid.ly``, ``initial_data.amplitude`` (a number, or ``"auto"``
for ``margin`` times the threshold amplitude), ``initial_data.margin``,
``stepper`` (any :class:`~hflow.integrator.StepperConfig` field),
``lambda1`` (``"discrete"`` or ``"continuum"``) and ``output_dir``.
A sweep config adds ``sweep: {"parameter": "amplitude" | "h0", "values": [...]}``.
"""
from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .concavity import ConcavitySample, check_concavity, read_samples_csv
from .criteria import CriterionReport, certificate, check_criterion, monitor_trace
from .functionals import lambda1 as lambda1_of
from .grid import Field3, GridSpec
from .initial_data import NoBlowupRayError, amplitude_for_criterion, mode_field, parse_modes
from .integrator import StepperConfig, run

logger = logging.getLogger("hflow")

TRACE_SCHEMA = "hflow.trace/1"
SWEEP_SCHEMA = "hflow.sweep/1"
SWEEP_COLUMNS = ("parameter", "gap", "t_bound", "li_satisfied", "detected", "t_detect", "error")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    grid: GridSpec
    h0: float
    modes: list
    amplitude: float | str = 1.0
    margin: float = 1.25
    stepper: StepperConfig = dataclasses.field(default_factory=StepperConfig)
    lambda1: str = "discrete"
    output_dir: str = "out"


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing required key '{where}{key}'")
    return d[key]


def parse_config(raw: dict) -> RunConfig:
    """Validate a config mapping; raises :class:`ConfigError` naming the bad key."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    g = _require(raw, "grid", "")
    try:
        grid = GridSpec(
            int(_require(g, "nx", "grid.")),
            int(_require(g, "ny", "grid.")),
            float(g.get("lx", 1.0)),
            float(g.get("ly", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid grid: {exc}") from None
    h0 = _require(raw, "h0", "")
    try:
        h0 = float(h0)
    except (TypeError, ValueError):
        raise ConfigError(f"h0 must be a number, got {h0!r}") from None
    if h0 == 0 or not math.isfinite(h0):
        raise ConfigError("h0 must be a finite nonzero number (H0 = 0 is excluded)")
    init = _require(raw, "initial_data", "")
    try:
        modes = parse_modes(_require(init, "modes", "initial_data."))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid initial_data.modes: {exc}") from None
    amplitude = init.get("amplitude", 1.0)
    if amplitude != "auto":
        try:
            amplitude = float(amplitude)
        except (TypeError, ValueError):
            raise ConfigError(f"initial_data.amplitude must be a number or 'auto', got {amplitude!r}") from None
    stepper_raw = raw.get("stepper", {})
    known = {f.name for f in dataclasses.fields(StepperConfig)}
    unknown = set(stepper_raw) - known
    if unknown:
        raise ConfigError(f"unknown stepper keys: {sorted(unknown)}")
    try:
        stepper = StepperConfig(**stepper_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid stepper: {exc}") from None
    lam = raw.get("lambda1", "discrete")
    if lam not in ("discrete", "continuum"):
        raise ConfigError(f"lambda1 must be 'discrete' or 'continuum', got {lam!r}")
    return RunConfig(
        grid=grid,
        h0=h0,
        modes=modes,
        amplitude=amplitude,
        margin=float(init.get("margin", 1.25)),
        stepper=stepper,
        lambda1=lam,
        output_dir=str(raw.get("output_dir", "out")),
    )


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None


def build_initial(cfg: RunConfig) -> tuple[Field3, float, dict]:
    """Initial field, the lambda1 in use and notes on the amplitude choice."""
    lam = lambda1_of(cfg.grid, cfg.lambda1)
    phi = mode_field(cfg.grid, cfg.modes)
    notes: dict = {}
    if cfg.amplitude == "auto":
        try:
            choice = amplitude_for_criterion(phi, cfg.h0, lam, cfg.margin)
        except NoBlowupRayError as exc:
            raise ConfigError(f"amplitude 'auto': {exc}") from None
        a = choice.amplitude
        notes = {"a_star": choice.a_star, "margin": cfg.margin, "amplitude": a}
    else:
        a = cfg.amplitude
        notes = {"amplitude": a}
    return a * phi, lam, notes


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def criterion_reason(rep: CriterionReport) -> str:
    if rep.li_satisfied:
        return "E(u0) < lambda1/6 ||u0||_2^2"
    if rep.degenerate:
        return "degenerate: zero initial data"
    if abs(rep.v0) <= 1e-12 * max(1.0, rep.l2sq0):
        return "Poincare: volume term vanishes, so E(u0) >= lambda1/2 ||u0||_2^2"
    return "E(u0) >= lambda1/6 ||u0||_2^2"


def simulate(cfg: RunConfig, out_dir: Path) -> dict:
    """Run one configuration and write ``trace.csv``, ``monitors.json`` and
    ``certificate.json`` into ``out_dir``.  Returns the certificate."""
    u0, lam, notes = build_initial(cfg)
    crit = check_criterion(u0, cfg.h0, lam)
    trace, blowup, _ = run(u0, cfg.h0, cfg.stepper)
    monitors = monitor_trace(trace, crit)
    cert = certificate(crit, blowup, monitors)
    cert["initial_data"] = notes
    cert["run"] = {
        "steps_accepted": trace.steps_accepted,
        "steps_rejected": trace.steps_rejected,
        "record_every": cfg.stepper.record_every,
        "wedge_form": cfg.stepper.wedge_form,
        "lambda1": cfg.lambda1,
        "version": __version__,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trace.csv").write_text(f"# schema={TRACE_SCHEMA}\n" + trace.to_csv())
    mon = monitors.to_dict()
    mon["schema"] = "hflow.monitors/1"
    _dump(mon, out_dir / "monitors.json")
    _dump(cert, out_dir / "certificate.json")
    return cert


def _apply_overrides(raw: dict, args) -> dict:
    raw = copy.deepcopy(raw)
    if getattr(args, "lambda1", None):
        raw["lambda1"] = args.lambda1
    if getattr(args, "record_every", None):
        raw.setdefault("stepper", {})["record_every"] = args.record_every
    return raw


def cmd_simulate(args) -> int:
    raw = _apply_overrides(load_config(args.config), args)
    cfg = parse_config(raw)
    out_dir = Path(args.out_dir or cfg.output_dir)
    cert = simulate(cfg, out_dir)
    c, b = cert["criterion"], cert["blowup"]
    print(f"li_satisfied={c['li_satisfied']} gap={c['gap']:.6g} t_bound={c['t_bound']}")
    print(f"detected={b['detected']} reason={b['reason']} t_detect={b['t_detect']}")
    print(f"wrote {out_dir / 'trace.csv'} and {out_dir / 'certificate.json'}")
    return 0


def cmd_check_criterion(args) -> int:
    raw = _apply_overrides(load_config(args.config), args)
    cfg = parse_config(raw)
    u0, lam, _ = build_initial(cfg)
    rep = check_criterion(u0, cfg.h0, lam)
    print(f"lambda1={rep.lambda1_used:.10g}")
    print(f"E0={rep.e0:.10g} l2sq0={rep.l2sq0:.10g} V0={rep.v0:.10g}")
    print(f"gap={rep.gap:.10g}")
    print(f"li_satisfied={rep.li_satisfied} ({criterion_reason(rep)})")
    print(f"t_bound={rep.t_bound:.10g}" if rep.t_bound is not None else "t_bound=none")
    print(
        f"huang_satisfied={rep.huang_satisfied} "
        f"(E threshold {rep.huang_e_threshold:.6g}, |V| threshold {rep.huang_v_threshold:.6g})"
    )
    if args.json:
        out = {"schema": "hflow.criterion/1", **rep.to_dict(), "reason": criterion_reason(rep)}
        _dump(out, Path(args.json))
    return 0


def _sweep_point(payload: tuple[dict, str, float, str]) -> dict:
    raw, param, value, out_dir = payload
    raw = copy.deepcopy(raw)
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row["parameter"] = value
    try:
        if param == "amplitude":
            raw.setdefault("initial_data", {})["amplitude"] = value
        else:
            raw["h0"] = value
        cfg = parse_config(raw)
        cert = simulate(cfg, Path(out_dir))
    except Exception as exc:  # recorded per point; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    c, b = cert["criterion"], cert["blowup"]
    row.update(
        gap=c["gap"], t_bound=c["t_bound"] if c["t_bound"] is not None else "",
        li_satisfied=c["li_satisfied"], detected=b["detected"],
        t_detect=b["t_detect"] if b["t_detect"] is not None else "",
    )
    return row


def cmd_sweep(args) -> int:
    raw = _apply_overrides(load_config(args.config), args)
    sweep = _require(raw, "sweep", "")
    param = _require(sweep, "parameter", "sweep.")
    if param not in ("amplitude", "h0"):
        raise ConfigError(f"sweep.parameter must be 'amplitude' or 'h0', got {param!r}")
    values = [float(v) for v in _require(sweep, "values", "sweep.")]
    base = {k: v for k, v in raw.items() if k != "sweep"}
    out_dir = Path(args.out_dir or raw.get("output_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if values:
        parse_config(dict(base, h0=values[0]) if param == "h0" else base)
    payloads = [(base, param, v, str(out_dir / f"point_{k:04d}")) for k, v in enumerate(values)]
    workers = args.workers or int(sweep.get("workers", 1))
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        fh.write(f"# schema={SWEEP_SCHEMA}\n")
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    failed = sum(1 for r in rows if r["error"])
    print(f"sweep over {param}: {len(rows)} points, {failed} failed; summary in {out_dir / 'summary.csv'}")
    return 0


def cmd_concavity(args) -> int:
    try:
        t, psi = read_samples_csv(args.csv)
        sample = ConcavitySample(t, psi, args.theta)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    res = check_concavity(sample, tol=args.tol)
    print(f"min_defect={res.min_defect:.6e} (normalized {res.min_normalized_defect:.3e})")
    print(f"hypothesis_ok={res.hypothesis_ok}")
    print(f"bound={res.bound:.10g}" if res.bound is not None else "bound=none (hypothesis violated)")
    print(res.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hflow", description="Heat flow of H-surfaces: simulation and blow-up diagnostics")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True)
        sp.add_argument("--lambda1", choices=("discrete", "continuum"))
        sp.add_argument("--record-every", type=int, dest="record_every")

    sp = sub.add_parser("simulate", help="run the flow and write trace + certificate")
    common(sp)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check-criterion", help="evaluate blow-up criteria at t=0 only")
    common(sp)
    sp.add_argument("--json", help="also write the report to this file")
    sp.set_defaults(func=cmd_check_criterion)

    sp = sub.add_parser("sweep", help="simulate over an amplitude or H0 range")
    common(sp)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("concavity-check", help="check the concavity inequality on sampled (t, psi)")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.set_defaults(func=cmd_concavity)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

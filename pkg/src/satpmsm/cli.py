"""Command-line interface.

    satpmsm simulate --config ipm.cfg [--out DIR] [--seed N]
    satpmsm estimate --config ipm.cfg [--ingest manifest.txt] [--seed N]
    satpmsm validate --config ipm.cfg
    satpmsm curves   --config ipm.cfg

simulate writes one trace CSV per planned run plus a manifest; estimate runs
the identification either on ingested traces (--ingest, or a manifest left by
a previous simulate) or fully in memory; validate and curves emit plot-data
CSVs. Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from .config import ProjectConfig, load_config
from .estimator import (
    ZeroRipple,
    ExperimentPlan,
    estimate_from_records,
    measure_traces,
    plan_runs,
    simulate_plan,
)
from .leastsq import RankDeficient
from .magnetics import NonConvergence
from .ripple import TooShort, Unresolved, default_discard
from .simulator import StepTooLarge, Trace
from .textio import ConfigError, read_manifest, write_manifest, write_report
from .validation import SweepSpec, angle_sweep, flux_by_integration, magnetization_curves, step_response

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

_NUMERICAL_ERRORS = (NonConvergence, StepTooLarge, TooShort, Unresolved, ZeroRipple, RankDeficient)


def _run_name(idx: int, role: str, i_target: float) -> str:
    return f"{idx:03d}_{role}_{i_target:+.3f}A.csv"


def cmd_simulate(config: ProjectConfig, seed: int) -> int:
    runs = plan_runs(config.plan, config.motor.R)
    traces, _ = simulate_plan(
        config.motor, runs,
        steps_per_period=config.steps_per_period,
        measure_periods=config.measure_periods,
        noise_amp=config.noise_amp, seed=seed, discard=config.discard)
    trace_dir = config.out_dir / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for idx, (run, trace) in enumerate(zip(runs, traces)):
        name = _run_name(idx, run.role, run.i_target)
        trace.to_csv(trace_dir / name)
        names.append(f"traces/{name}")
    omega_hz = config.plan.omega / (2.0 * math.pi)
    write_manifest(config.out_dir / "manifest.txt", runs, names, omega_hz)
    print(f"wrote {len(runs)} traces and manifest.txt to {config.out_dir}")
    return EXIT_OK


def _plan_from_manifest(entries) -> ExperimentPlan:
    omegas = {run.spec.omega for run, _ in entries}
    if len(omegas) != 1:
        raise ConfigError("ingest manifest mixes injection pulsations")
    u_tildes = {max(run.spec.u_tilde_d, run.spec.u_tilde_q) for run, _ in entries}
    if len(u_tildes) != 1:
        raise ConfigError("ingest manifest mixes ripple amplitudes")
    runs = [run for run, _ in entries]
    return ExperimentPlan(
        omega=omegas.pop(),
        waveform=runs[0].spec.waveform,
        u_tilde=u_tildes.pop(),
        id_grid=tuple(r.i_target for r in runs if r.role == "d_sweep"),
        iq_grid=tuple(r.i_target for r in runs if r.role == "cross_d_inj"),
    )


def cmd_estimate(config: ProjectConfig, seed: int, ingest: Path | None) -> int:
    if ingest is None and config.ingest is not None:
        ingest = config.ingest
    if ingest is None:
        default_manifest = config.out_dir / "manifest.txt"
        if default_manifest.exists():
            ingest = default_manifest

    if ingest is not None:
        entries = read_manifest(ingest)
        runs = [run for run, _ in entries]
        traces = [Trace.from_csv(p) for _, p in entries]
        plan = _plan_from_manifest(entries)
        discard = config.discard
        if discard is None:
            discard = default_discard(config.motor, runs[0].spec)
        records = measure_traces(runs, traces, discard)
        result = estimate_from_records(records, config.motor, plan)
        source = f"ingested {len(runs)} traces from {ingest}"
    else:
        runs = plan_runs(config.plan, config.motor.R)
        traces, discard = simulate_plan(
            config.motor, runs,
            steps_per_period=config.steps_per_period,
            measure_periods=config.measure_periods,
            noise_amp=config.noise_amp, seed=seed, discard=config.discard)
        records = measure_traces(runs, traces, discard)
        result = estimate_from_records(records, config.motor, config.plan)
        source = f"simulated {len(runs)} runs in memory"

    config.out_dir.mkdir(parents=True, exist_ok=True)
    report_path = config.out_dir / "report.txt"
    write_report(report_path, result)
    p = result.params
    print(f"# {source}")
    print(f"Ld  = {p.Ld * 1e3:10.4f} mH   (1-sigma {result.sigma['Ld'] * 1e3:.4f})")
    print(f"Lq  = {p.Lq * 1e3:10.4f} mH   (1-sigma {result.sigma['Lq'] * 1e3:.4f})")
    for name in ("a30", "a12", "a40", "a22", "a04"):
        unit = "A/Wb^2" if name in ("a30", "a12") else "A/Wb^3"
        print(f"{name} = {getattr(p, name):10.4f} {unit} (1-sigma {result.sigma[name]:.4f})")
    print(f"report written to {report_path}")
    return EXIT_OK


def cmd_validate(config: ProjectConfig) -> int:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    v = config.validation
    sweep = SweepSpec(
        angle_deg=v.angle_deg, magnitudes=v.mag_grid,
        omega=config.plan.omega, waveform=config.plan.waveform,
        u_tilde=config.plan.u_tilde, inject_axis=v.inject_axis)
    result = angle_sweep(config.motor, sweep,
                         steps_per_period=config.steps_per_period,
                         measure_periods=config.measure_periods)
    sweep_path = config.out_dir / f"angle_sweep_{v.angle_deg:g}deg.csv"
    result.write_csv(sweep_path)
    print(f"wrote {sweep_path}")

    for u_step in v.step_volts:
        r = step_response(config.motor, u_step, v.step_t_end)
        step_path = config.out_dir / f"step_response_{u_step:+.2f}V.csv"
        r.write_csv(step_path)
        flux = flux_by_integration(r.saturated, config.motor)
        flux_path = config.out_dir / f"flux_integration_{u_step:+.2f}V.csv"
        flux.write_csv(flux_path)
        print(f"wrote {step_path}")
        print(f"wrote {flux_path}")
    return EXIT_OK


def cmd_curves(config: ProjectConfig) -> int:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    c = config.curves
    curves = magnetization_curves(config.motor, c.grid, c.levels)
    path_d = config.out_dir / "magnetization_phid.csv"
    path_q = config.out_dir / "magnetization_phiq.csv"
    curves.write_csv(path_d, path_q)
    print(f"wrote {path_d}")
    print(f"wrote {path_q}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satpmsm",
        description="Saturated-PMSM injection simulator and magnetic-parameter estimator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_seed, needs_ingest in (
        ("simulate", True, False),
        ("estimate", True, True),
        ("validate", False, False),
        ("curves", False, False),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="project config file")
        sp.add_argument("--out", help="output directory (overrides [paths] out_dir)")
        if needs_seed:
            sp.add_argument("--seed", type=int, default=0, help="noise seed")
        if needs_ingest:
            sp.add_argument("--ingest", help="run manifest of externally recorded traces")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.out:
            config = dataclasses.replace(config, out_dir=Path(args.out))
        if args.command == "simulate":
            return cmd_simulate(config, args.seed)
        if args.command == "estimate":
            ingest = Path(args.ingest) if getattr(args, "ingest", None) else None
            return cmd_estimate(config, args.seed, ingest)
        if args.command == "validate":
            return cmd_validate(config)
        return cmd_curves(config)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Project configuration: one key-value text file wiring a motor, an
experiment plan and simulation settings to the CLI commands.

Field names carry their unit (Ld_mH, omega_Hz, noise_mA); values convert to
SI exactly once, here. Keeping datasheet-style units in the file makes motor
fixtures transcribable without conversion mistakes.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

from .estimator import ExperimentPlan
from .magnetics import MotorParams
from .textio import ConfigError, get_float, parse_sections, waveform_from_name


def symmetric_grid(limit: float, step: float) -> tuple[float, ...]:
    """Zero-symmetric current grid: +-step, +-2*step, ... up to +-limit (the
    endpoints are always included)."""
    if not (limit > 0 and step > 0):
        raise ValueError("limit and step must be positive")
    k_max = int(math.floor(limit / step + 1e-9))
    values = [k * step for k in range(1, k_max + 1)]
    if not values or limit - values[-1] > 1e-9 * limit:
        values.append(limit)
    return tuple(sorted([-v for v in values] + values))


def _parse_grid(body: dict[str, str], axis: str, where: str) -> tuple[float, ...]:
    key_list = f"{axis}_grid_A"
    key_max = f"{axis}_max_A"
    key_step = f"{axis}_step_A"
    if key_list in body:
        try:
            return tuple(float(v) for v in body[key_list].split(","))
        except ValueError:
            raise ConfigError(f"{where}: {key_list} must be a comma-separated number list") from None
    if key_max in body or key_step in body:
        return symmetric_grid(get_float(body, key_max, where), get_float(body, key_step, where))
    return ()


@dataclasses.dataclass(frozen=True)
class ValidationConfig:
    angle_deg: float
    mag_grid: tuple[float, ...]
    inject_axis: str
    step_volts: tuple[float, ...]
    step_t_end: float


@dataclasses.dataclass(frozen=True)
class CurvesConfig:
    grid: tuple[float, ...]
    levels: tuple[float, ...]


@dataclasses.dataclass(frozen=True)
class ProjectConfig:
    motor: MotorParams
    plan: ExperimentPlan
    steps_per_period: int
    measure_periods: int
    noise_amp: float
    discard: float | None
    out_dir: Path
    ingest: Path | None
    validation: ValidationConfig
    curves: CurvesConfig


def load_config(path) -> ProjectConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    sections = dict()
    for name, body in parse_sections(path):
        if name in sections:
            raise ConfigError(f"{path}: duplicate section [{name}]")
        sections[name] = body
    for required in ("motor", "plan"):
        if required not in sections:
            raise ConfigError(f"{path}: missing section [{required}]")

    m = sections["motor"]
    where = f"{path} [motor]"
    motor = MotorParams(
        R=get_float(m, "R_ohm", where),
        Ld=get_float(m, "Ld_mH", where) * 1e-3,
        Lq=get_float(m, "Lq_mH", where) * 1e-3,
        phi_m=get_float(m, "phi_m_Wb", where) if "phi_m_Wb" in m else 0.0,
        n_pp=int(get_float(m, "pole_pairs", where)) if "pole_pairs" in m else 1,
        a30=get_float(m, "a30_AperWb2", where) if "a30_AperWb2" in m else 0.0,
        a12=get_float(m, "a12_AperWb2", where) if "a12_AperWb2" in m else 0.0,
        a40=get_float(m, "a40_AperWb3", where) if "a40_AperWb3" in m else 0.0,
        a22=get_float(m, "a22_AperWb3", where) if "a22_AperWb3" in m else 0.0,
        a04=get_float(m, "a04_AperWb3", where) if "a04_AperWb3" in m else 0.0,
    )

    pl = sections["plan"]
    where = f"{path} [plan]"
    waveform = waveform_from_name(pl.get("waveform", "square"), path.parent, where)
    plan = ExperimentPlan(
        omega=2.0 * math.pi * get_float(pl, "omega_Hz", where),
        waveform=waveform,
        u_tilde=get_float(pl, "u_tilde_V", where),
        id_grid=_parse_grid(pl, "id", where),
        iq_grid=_parse_grid(pl, "iq", where),
    )

    sim = sections.get("sim", {})
    where = f"{path} [sim]"
    steps_per_period = int(get_float(sim, "steps_per_period", where)) if "steps_per_period" in sim else 200
    measure_periods = int(get_float(sim, "measure_periods", where)) if "measure_periods" in sim else 40
    noise_amp = get_float(sim, "noise_mA", where) * 1e-3 if "noise_mA" in sim else 0.0
    discard = get_float(sim, "discard_s", where) if "discard_s" in sim else None
    if noise_amp < 0:
        raise ConfigError(f"{where}: noise_mA must be >= 0")
    if steps_per_period < 50 or steps_per_period % 2:
        raise ConfigError(f"{where}: steps_per_period must be even and >= 50")
    if measure_periods < 2:
        raise ConfigError(f"{where}: measure_periods must be >= 2")

    paths = sections.get("paths", {})
    out_dir = Path(paths["out_dir"]) if "out_dir" in paths else Path("out")
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir
    ingest = None
    if "ingest" in paths:
        ingest = Path(paths["ingest"])
        if not ingest.is_absolute():
            ingest = path.parent / ingest

    va = sections.get("validate", {})
    where = f"{path} [validate]"
    max_bias = max((abs(v) for v in plan.id_grid), default=1.0)
    mag_grid = tuple(v for v in _parse_grid(va, "mag", where) if v >= 0)
    if not mag_grid:
        mag_grid = tuple(v for v in symmetric_grid(max_bias, max_bias / 4) if v >= 0)
    if "step_volts_V" in va:
        try:
            step_volts = tuple(float(v) for v in va["step_volts_V"].split(","))
        except ValueError:
            raise ConfigError(f"{where}: step_volts_V must be a comma-separated list") from None
    else:
        step_volts = (0.25 * motor.R * max_bias, motor.R * max_bias)
    validation = ValidationConfig(
        angle_deg=get_float(va, "angle_deg", where) if "angle_deg" in va else 60.0,
        mag_grid=mag_grid,
        inject_axis=va.get("inject_axis", "d"),
        step_volts=step_volts,
        step_t_end=get_float(va, "step_t_end_s", where) if "step_t_end_s" in va else 12.0 * motor.Ld / motor.R,
    )

    cu = sections.get("curves", {})
    where = f"{path} [curves]"
    grid = _parse_grid(cu, "curve", where)
    if not grid:
        grid = symmetric_grid(max_bias, max_bias / 8)
    levels_raw = cu.get("levels_A")
    if levels_raw is not None:
        try:
            levels = tuple(float(v) for v in levels_raw.split(","))
        except ValueError:
            raise ConfigError(f"{where}: levels_A must be a comma-separated list") from None
    else:
        iq_max = max((abs(v) for v in plan.iq_grid), default=max_bias)
        levels = (0.0, 0.5 * iq_max, iq_max)
    curves = CurvesConfig(grid=grid, levels=levels)

    return ProjectConfig(
        motor=motor, plan=plan,
        steps_per_period=steps_per_period, measure_periods=measure_periods,
        noise_amp=noise_amp, discard=discard,
        out_dir=out_dir, ingest=ingest,
        validation=validation, curves=curves,
    )

"""Structured key-value text: config files, run manifests and result reports.

The shared format is INI-like sections of `key = value` lines; `#` starts a
comment. Unlike configparser, repeated section names are kept in order, which
is how a manifest lists one [run] block per trace.
"""

from __future__ import annotations

import math
from pathlib import Path

from .injection import SAMPLED, InjectionSpec, Waveform
from .estimator import EstimationResult, PlanRun


class ConfigError(ValueError):
    """Malformed config/manifest text; the message carries file and line."""


def parse_sections(path) -> list[tuple[str, dict[str, str]]]:
    """All sections in file order as (name, {key: value})."""
    sections: list[tuple[str, dict[str, str]]] = []
    current: dict[str, str] | None = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = {}
                sections.append((line[1:-1].strip(), current))
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            if current is None:
                raise ConfigError(f"{path}:{lineno}: key outside of any [section]")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in current:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            current[key] = value
    return sections


def get_float(section: dict[str, str], key: str, where: str) -> float:
    if key not in section:
        raise ConfigError(f"{where}: missing field {key!r}")
    try:
        value = float(section[key])
    except ValueError:
        raise ConfigError(f"{where}: field {key!r} is not a number: {section[key]!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{where}: field {key!r} must be finite")
    return value


def waveform_from_name(name: str, base_dir: Path, where: str) -> Waveform:
    name = name.strip()
    if name == "square":
        return Waveform.square()
    if name == "sine":
        return Waveform.sine()
    if name.startswith("file:"):
        path = base_dir / name[len("file:"):].strip()
        if not path.exists():
            raise ConfigError(f"{where}: waveform file {path} does not exist")
        return Waveform.from_file(path)
    raise ConfigError(f"{where}: unknown waveform {name!r} (square, sine or file:<path>)")


def write_waveform_file(path, w: Waveform) -> None:
    """One sampled-waveform period, one value per line."""
    if w.kind != SAMPLED:
        raise ValueError("only sampled waveforms are written to files")
    with open(path, "w") as fh:
        fh.write("\n".join(f"{v:.17g}" for v in w.samples) + "\n")


def write_manifest(path, runs: list[PlanRun], trace_files: list[str], omega_hz: float) -> None:
    """One [run] block per trace: role, target current, drive and CSV path.

    A sampled waveform is written next to the manifest and referenced by
    file, keeping the output directory a self-contained dataset.
    """
    path = Path(path)
    waveform = runs[0].spec.waveform if runs else None
    if waveform is not None and waveform.kind == SAMPLED:
        write_waveform_file(path.parent / "waveform.txt", waveform)
        waveform_name = "file:waveform.txt"
    else:
        waveform_name = waveform.kind if waveform is not None else ""
    with open(path, "w") as fh:
        fh.write("# identification run manifest\n")
        for run, rel in zip(runs, trace_files):
            fh.write("\n[run]\n")
            fh.write(f"role = {run.role}\n")
            fh.write(f"i_target_A = {run.i_target:.17g}\n")
            fh.write(f"u_bar_d_V = {run.spec.u_bar_d:.17g}\n")
            fh.write(f"u_bar_q_V = {run.spec.u_bar_q:.17g}\n")
            fh.write(f"u_tilde_d_V = {run.spec.u_tilde_d:.17g}\n")
            fh.write(f"u_tilde_q_V = {run.spec.u_tilde_q:.17g}\n")
            fh.write(f"omega_Hz = {omega_hz:.17g}\n")
            fh.write(f"waveform = {waveform_name}\n")
            fh.write(f"trace = {rel}\n")


def read_manifest(path) -> list[tuple[PlanRun, Path]]:
    """Planned runs and their trace paths (resolved against the manifest)."""
    base = Path(path).parent
    out: list[tuple[PlanRun, Path]] = []
    for idx, (name, body) in enumerate(parse_sections(path)):
        where = f"{path} [run #{idx + 1}]"
        if name != "run":
            raise ConfigError(f"{where}: unexpected section [{name}]")
        for key in ("role", "trace"):
            if key not in body:
                raise ConfigError(f"{where}: missing field {key!r}")
        omega = 2.0 * math.pi * get_float(body, "omega_Hz", where)
        spec = InjectionSpec(
            u_bar_d=get_float(body, "u_bar_d_V", where),
            u_bar_q=get_float(body, "u_bar_q_V", where),
            u_tilde_d=get_float(body, "u_tilde_d_V", where),
            u_tilde_q=get_float(body, "u_tilde_q_V", where),
            omega=omega,
            waveform=waveform_from_name(body["waveform"], base, where),
        )
        run = PlanRun(role=body["role"], i_target=get_float(body, "i_target_A", where), spec=spec)
        trace_path = base / body["trace"]
        if not trace_path.exists():
            raise ConfigError(f"{where}: trace file {trace_path} does not exist")
        out.append((run, trace_path))
    return out


def write_report(path, result: EstimationResult) -> None:
    """Parameter report; uncertainties are 1-sigma standard errors."""
    p = result.params
    with open(path, "w") as fh:
        fh.write("# estimated magnetic parameters (uncertainties are 1-sigma)\n")
        fh.write("[parameters]\n")
        fh.write(f"Ld_mH = {p.Ld * 1e3:.17g}\n")
        fh.write(f"Lq_mH = {p.Lq * 1e3:.17g}\n")
        fh.write(f"a30_AperWb2 = {p.a30:.17g}\n")
        fh.write(f"a12_AperWb2 = {p.a12:.17g}\n")
        fh.write(f"a40_AperWb3 = {p.a40:.17g}\n")
        fh.write(f"a22_AperWb3 = {p.a22:.17g}\n")
        fh.write(f"a04_AperWb3 = {p.a04:.17g}\n")
        fh.write(f"R_ohm = {p.R:.17g}\n")
        fh.write(f"phi_m_Wb = {p.phi_m:.17g}\n")
        fh.write(f"pole_pairs = {p.n_pp}\n")
        fh.write("\n[sigma]\n")
        fh.write(f"Ld_mH = {result.sigma['Ld'] * 1e3:.17g}\n")
        fh.write(f"Lq_mH = {result.sigma['Lq'] * 1e3:.17g}\n")
        for name in ("a30", "a12", "a40", "a22", "a04"):
            unit = "AperWb2" if name in ("a30", "a12") else "AperWb3"
            fh.write(f"{name}_{unit} = {result.sigma[name]:.17g}\n")
        fh.write("\n[fit_residual_rms]\n")
        for name, value in result.fit_residuals.items():
            fh.write(f"{name} = {value:.17g}\n")


def read_report(path) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for name, body in parse_sections(path):
        out[name] = {k: float(v) for k, v in body.items()}
    return out

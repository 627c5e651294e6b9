"""Validation experiments: current-angle sweeps, large-step time responses,
flux reconstruction by voltage integration, and magnetization curves.

Each experiment returns plain arrays plus a plot-data CSV writer, so any
external tool can render the figures; nothing here draws.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .estimator import predict_ripple
from .injection import InjectionSpec, Waveform
from .magnetics import Currents, MotorParams, flux_from_currents_exact
from .ripple import default_discard, extract_ripple
from .simulator import SimConfig, Trace, simulate, simulate_batch


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """Current-angle sweep: vector angle, magnitude grid and the injection
    used to measure the ripple at each operating point."""

    angle_deg: float
    magnitudes: tuple[float, ...]
    omega: float
    waveform: Waveform
    u_tilde: float
    inject_axis: str = "d"

    def __post_init__(self) -> None:
        if any(m < 0 for m in self.magnitudes):
            raise ValueError("magnitudes must be >= 0")
        if self.inject_axis not in ("d", "q"):
            raise ValueError("inject_axis must be 'd' or 'q'")
        if not (self.omega > 0 and self.u_tilde > 0):
            raise ValueError("omega and u_tilde must be positive")


@dataclasses.dataclass(frozen=True)
class AngleSweepResult:
    magnitudes: np.ndarray
    predicted_d: np.ndarray
    simulated_d: np.ndarray
    predicted_q: np.ndarray
    simulated_q: np.ndarray
    inject_axis: str

    def write_csv(self, path) -> None:
        """x,y_model,y_measured for the injected-axis ripple."""
        pred = self.predicted_d if self.inject_axis == "d" else self.predicted_q
        sim = self.simulated_d if self.inject_axis == "d" else self.simulated_q
        with open(path, "w") as fh:
            fh.write("x,y_model,y_measured\n")
            for row in zip(self.magnitudes, pred, sim):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def angle_sweep(p: MotorParams, s: SweepSpec, *, steps_per_period: int = 200,
                measure_periods: int = 40) -> AngleSweepResult:
    """Ripple amplitudes along a fixed current-vector angle: first-order
    prediction next to a full simulate-and-extract measurement per magnitude."""
    angle = math.radians(s.angle_deg)
    ut_d = s.u_tilde if s.inject_axis == "d" else 0.0
    ut_q = s.u_tilde if s.inject_axis == "q" else 0.0
    specs = []
    for m in s.magnitudes:
        i_d, i_q = m * math.cos(angle), m * math.sin(angle)
        specs.append(InjectionSpec(p.R * i_d, p.R * i_q, ut_d, ut_q, s.omega, s.waveform))
    discard = default_discard(p, specs[0])
    cfg = SimConfig(dt=specs[0].period / steps_per_period,
                    t_end=discard + measure_periods * specs[0].period)
    traces = simulate_batch(p, specs, cfg)
    pred_d, pred_q, sim_d, sim_q = [], [], [], []
    for spec, tr in zip(specs, traces):
        tp_d, tp_q = predict_ripple(p, spec)
        meas = extract_ripple(tr, spec, discard)
        pred_d.append(tp_d)
        pred_q.append(tp_q)
        sim_d.append(meas.i_tilde_d)
        sim_q.append(meas.i_tilde_q)
    return AngleSweepResult(
        magnitudes=np.asarray(s.magnitudes, dtype=float),
        predicted_d=np.array(pred_d), simulated_d=np.array(sim_d),
        predicted_q=np.array(pred_q), simulated_q=np.array(sim_q),
        inject_axis=s.inject_axis)


@dataclasses.dataclass(frozen=True)
class StepResponseResult:
    saturated: Trace
    linear: Trace

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,i_sat,i_lin\n")
            for row in zip(self.saturated.t, self.saturated.i_d, self.linear.i_d):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def step_response(p: MotorParams, u_step: float, t_end: float, *,
                  n_samples: int = 2000) -> StepResponseResult:
    """d-axis voltage step from zero flux, locked rotor: the full model next
    to the same motor with the saturation coefficients zeroed."""
    # constant drive: the sine waveform with zero ripple has no step-grid
    # alignment constraint
    spec = InjectionSpec(u_step, 0.0, 0.0, 0.0, 2 * math.pi * 500.0, Waveform.sine())
    dt = t_end / n_samples
    dt = min(dt, spec.period / 200)
    stride = max(1, round(t_end / n_samples / dt))
    cfg = SimConfig(dt=dt, t_end=t_end, sample_period=stride * dt)
    sat = simulate(p, spec, cfg)
    lin = simulate(p.without_saturation(), spec, cfg)
    return StepResponseResult(saturated=sat, linear=lin)


@dataclasses.dataclass(frozen=True)
class FluxIntegrationResult:
    i_d: np.ndarray
    phi_d_integrated: np.ndarray
    phi_d_model: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,y_model,y_measured\n")
            for row in zip(self.i_d, self.phi_d_model, self.phi_d_integrated):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def flux_by_integration(trace: Trace, p: MotorParams) -> FluxIntegrationResult:
    """Reconstruct phi_d(t) = phi_d(0) + integral(u_d - R i_d) dt by the
    trapezoidal rule and pair it with the concurrent current.

    The model column re-derives the flux from the measured current pair
    through the exact inversion, for overlay plots. Starts from the trace's
    flux channel when present, else from zero (de-energized motor).
    """
    integrand = trace.u_d - p.R * trace.i_d
    dt = np.diff(trace.t)
    phi0 = float(trace.phi_d[0]) if trace.phi_d is not None else 0.0
    phi = phi0 + np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * dt)])
    model = np.array([
        flux_from_currents_exact(p, Currents(float(i_d), float(i_q)), tol=1e-10).phi_d
        for i_d, i_q in zip(trace.i_d, trace.i_q)
    ])
    return FluxIntegrationResult(i_d=trace.i_d.copy(), phi_d_integrated=phi, phi_d_model=model)


@dataclasses.dataclass(frozen=True)
class MagnetizationCurves:
    """phi_d over the current grid at fixed i_q levels, and phi_q over the
    grid (as i_q) at fixed i_d levels."""

    grid: np.ndarray
    iq_levels: tuple[float, ...]
    phi_d: np.ndarray  # shape (n_levels, n_grid)
    id_levels: tuple[float, ...]
    phi_q: np.ndarray

    def write_csv(self, path_d, path_q) -> None:
        with open(path_d, "w") as fh:
            fh.write("i_d," + ",".join(f"phi_d_at_iq_{lv:g}" for lv in self.iq_levels) + "\n")
            for j, x in enumerate(self.grid):
                fh.write(",".join(f"{v:.17g}" for v in [x, *self.phi_d[:, j]]) + "\n")
        with open(path_q, "w") as fh:
            fh.write("i_q," + ",".join(f"phi_q_at_id_{lv:g}" for lv in self.id_levels) + "\n")
            for j, x in enumerate(self.grid):
                fh.write(",".join(f"{v:.17g}" for v in [x, *self.phi_q[:, j]]) + "\n")


def magnetization_curves(p: MotorParams, grid: Sequence[float],
                         levels: Sequence[float]) -> MagnetizationCurves:
    """Flux-current curves by numerically inverting the magnetization map on
    a grid; one curve per fixed other-axis current level."""
    grid = np.asarray(grid, dtype=float)
    phi_d = np.empty((len(levels), len(grid)))
    phi_q = np.empty((len(levels), len(grid)))
    for i, lv in enumerate(levels):
        for j, x in enumerate(grid):
            f = flux_from_currents_exact(p, Currents(float(x), float(lv)), tol=1e-12)
            phi_d[i, j] = f.phi_d
            f = flux_from_currents_exact(p, Currents(float(lv), float(x)), tol=1e-12)
            phi_q[i, j] = f.phi_q
    return MagnetizationCurves(grid=grid, iq_levels=tuple(levels), phi_d=phi_d,
                               id_levels=tuple(levels), phi_q=phi_q)

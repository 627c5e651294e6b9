"""Magnetic-parameter identification from injection runs.

The experiment plan realizes the four locked-rotor configurations that
decouple the least-squares problem:

  (a) zero bias, one axis injected     -> Ld, Lq from the linear ripple
  (b) d-axis bias sweep, d injection   -> a30, a40
  (c) q-axis bias sweep, d injection   -> a22 (d ripple) and a12 (q ripple)
  (d) q-axis bias sweep, q injection   -> a12 (d ripple) and a04 (q ripple)

Bias voltages follow from the target mean currents through u_bar = R * i_bar;
R is an input (taken as known), never estimated. Inductances are fixed first
from (a) and then held while the saturation coefficients are regressed, so
each regression is linear in its unknowns.

Reported uncertainties are 1-sigma standard errors: per-run ripple standard
errors (from the extraction fit) propagate through each regression, plus the
first-order effect of the inductance-estimate uncertainty on the regressors.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Sequence

import numpy as np

from .injection import InjectionSpec, Waveform
from .leastsq import RankDeficient, ols_fit
from .magnetics import MotorParams
from .ripple import RippleMeasurement, default_discard, extract_ripple
from .simulator import SimConfig, Trace, simulate_batch

ROLE_LD = "ld"
ROLE_LQ = "lq"
ROLE_D_SWEEP = "d_sweep"
ROLE_CROSS_D_INJ = "cross_d_inj"
ROLE_CROSS_Q_INJ = "cross_q_inj"

ALL_ROLES = (ROLE_LD, ROLE_LQ, ROLE_D_SWEEP, ROLE_CROSS_D_INJ, ROLE_CROSS_Q_INJ)

PARAM_NAMES = ("Ld", "Lq", "a30", "a12", "a40", "a22", "a04")

_ZERO_RIPPLE_FLOOR = 1e-12


class ZeroRipple(RuntimeError):
    """Measured ripple is indistinguishable from zero; cannot divide by it."""


@dataclasses.dataclass(frozen=True)
class ExperimentPlan:
    """Sweep definition: pulsation, waveform, ripple amplitude and the target
    mean-current grids for the bias sweeps."""

    omega: float
    waveform: Waveform
    u_tilde: float
    id_grid: tuple[float, ...] = ()
    iq_grid: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError("omega must be positive")
        if not (self.u_tilde > 0 and math.isfinite(self.u_tilde)):
            raise ValueError("u_tilde must be positive")
        for grid in (self.id_grid, self.iq_grid):
            if not all(math.isfinite(v) for v in grid):
                raise ValueError("grid currents must be finite")


@dataclasses.dataclass(frozen=True)
class PlanRun:
    """One planned injection run: its role in the estimation, the target mean
    current on the biased axis (0 for the zero-bias runs), and the drive."""

    role: str
    i_target: float
    spec: InjectionSpec


@dataclasses.dataclass(frozen=True)
class RunRecord:
    """A planned run together with its extracted ripple measurement."""

    run: PlanRun
    meas: RippleMeasurement


@dataclasses.dataclass(frozen=True)
class EstimationResult:
    params: MotorParams
    sigma: dict[str, float]
    fit_residuals: dict[str, float]

    def __post_init__(self) -> None:
        if any(s < 0 for s in self.sigma.values()):
            raise ValueError("sigma values must be >= 0")


class InductanceEstimate(NamedTuple):
    L_d: float
    L_q: float
    sigma_L_d: float
    sigma_L_q: float


class DAxisEstimate(NamedTuple):
    a30: float
    a40: float
    sigma_a30: float
    sigma_a40: float
    residual_rms: float


class CrossEstimate(NamedTuple):
    a22: float
    a12: float
    a04: float
    sigma_a22: float
    sigma_a12: float
    sigma_a04: float
    residual_rms_a22: float
    residual_rms_a12: float
    residual_rms_a04: float


def plan_runs(plan: ExperimentPlan, R: float) -> list[PlanRun]:
    """Emit the injection specs for the four configurations (see module
    docstring); empty grids reduce the plan to the two zero-bias runs."""
    if not R > 0:
        raise ValueError("R must be positive")
    w, omega, ut = plan.waveform, plan.omega, plan.u_tilde
    runs = [
        PlanRun(ROLE_LD, 0.0, InjectionSpec(0.0, 0.0, ut, 0.0, omega, w)),
        PlanRun(ROLE_LQ, 0.0, InjectionSpec(0.0, 0.0, 0.0, ut, omega, w)),
    ]
    for i_bar in plan.id_grid:
        runs.append(PlanRun(
            ROLE_D_SWEEP, i_bar, InjectionSpec(R * i_bar, 0.0, ut, 0.0, omega, w)))
    for i_bar in plan.iq_grid:
        runs.append(PlanRun(
            ROLE_CROSS_D_INJ, i_bar, InjectionSpec(0.0, R * i_bar, ut, 0.0, omega, w)))
    for i_bar in plan.iq_grid:
        runs.append(PlanRun(
            ROLE_CROSS_Q_INJ, i_bar, InjectionSpec(0.0, R * i_bar, 0.0, ut, omega, w)))
    return runs


def _checked_ripple(i_tilde: float, sigma: float, context: str) -> float:
    if abs(i_tilde) <= max(10.0 * sigma, _ZERO_RIPPLE_FLOOR):
        raise ZeroRipple(
            f"{context}: ripple {i_tilde:.3g} A is below 10x its noise floor {sigma:.3g} A")
    return i_tilde


def estimate_L(meas_d: RippleMeasurement, meas_q: RippleMeasurement,
               plan: ExperimentPlan) -> InductanceEstimate:
    """Inductances from the two zero-bias runs: L = u_tilde / (omega * i_tilde)
    on the injected axis of each run."""
    it_d = _checked_ripple(meas_d.i_tilde_d, meas_d.sigma_i_tilde_d, "d-axis zero-bias run")
    it_q = _checked_ripple(meas_q.i_tilde_q, meas_q.sigma_i_tilde_q, "q-axis zero-bias run")
    L_d = plan.u_tilde / (plan.omega * it_d)
    L_q = plan.u_tilde / (plan.omega * it_q)
    sigma_L_d = abs(L_d) * meas_d.sigma_i_tilde_d / abs(it_d)
    sigma_L_q = abs(L_q) * meas_q.sigma_i_tilde_q / abs(it_q)
    return InductanceEstimate(L_d, L_q, sigma_L_d, sigma_L_q)


def _propagated_sigma(X, xtx_inv, sigma_y, beta_fn, L_vals, L_sigmas):
    """Standard errors of an OLS fit with independent per-point noise, plus
    the first-order contribution of the inductance estimates entering the
    regressors and intercepts (via finite differences of the whole fit)."""
    A = xtx_inv @ X.T
    var = (A * A) @ (np.asarray(sigma_y) ** 2)
    beta0 = beta_fn(*L_vals)
    for j, (val, sig) in enumerate(zip(L_vals, L_sigmas)):
        if sig == 0.0:
            continue
        h = 1e-6 * val
        bumped = list(L_vals)
        bumped[j] = val + h
        dbeta = (beta_fn(*bumped) - beta0) / h
        var = var + (dbeta * sig) ** 2
    return np.sqrt(var)


def estimate_d_axis(meas: Sequence[RippleMeasurement], L_d: float,
                    plan: ExperimentPlan, sigma_L_d: float = 0.0) -> DAxisEstimate:
    """d-axis saturation from the bias sweep (b): regress the excess ripple
    slope omega*i_tilde_d/u_tilde - 1/L_d on [6 L_d i_bar, 12 L_d^2 i_bar^2]."""
    if len({m.i_bar_d for m in meas}) < 3:
        raise RankDeficient("d-axis sweep needs >= 3 distinct bias currents")
    i_bar = np.array([m.i_bar_d for m in meas])
    i_tilde = np.array([m.i_tilde_d for m in meas])
    sigma_y = plan.omega * np.array([m.sigma_i_tilde_d for m in meas]) / plan.u_tilde

    def fit(L):
        X = np.column_stack([6.0 * L * i_bar, 12.0 * L * L * i_bar * i_bar])
        y = plan.omega * i_tilde / plan.u_tilde - 1.0 / L
        return X, y

    X, y = fit(L_d)
    beta, xtx_inv, resid = ols_fit(X, y)
    sig = _propagated_sigma(
        X, xtx_inv, sigma_y,
        lambda L: ols_fit(*fit(L))[0], [L_d], [sigma_L_d])
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return DAxisEstimate(float(beta[0]), float(beta[1]), float(sig[0]), float(sig[1]), rms)


def estimate_cross(meas_c: Sequence[RippleMeasurement], meas_d: Sequence[RippleMeasurement],
                   L_d: float, L_q: float, plan: ExperimentPlan,
                   sigma_L_d: float = 0.0, sigma_L_q: float = 0.0) -> CrossEstimate:
    """Cross and q-axis saturation from the q-bias sweeps.

    a22 from the d ripple under d injection (c); a12 from one stacked
    regression over the q ripple of (c) and the d ripple of (d) (both scale
    with 2 L_q i_bar_q); a04 from the q ripple under q injection (d).
    """
    if len({m.i_bar_q for m in meas_c} | {m.i_bar_q for m in meas_d}) < 3:
        raise RankDeficient("cross sweeps need >= 3 distinct bias currents")
    ib_c = np.array([m.i_bar_q for m in meas_c])
    ib_d = np.array([m.i_bar_q for m in meas_d])
    om, ut = plan.omega, plan.u_tilde

    def fit_a22(Ld, Lq):
        X = (2.0 * Lq * Lq * ib_c * ib_c)[:, None]
        y = om * np.array([m.i_tilde_d for m in meas_c]) / ut - 1.0 / Ld
        return X, y

    def fit_a12(Lq):
        X = np.concatenate([2.0 * Lq * ib_c, 2.0 * Lq * ib_d])[:, None]
        y = om / ut * np.concatenate([
            [m.i_tilde_q for m in meas_c],
            [m.i_tilde_d for m in meas_d],
        ])
        return X, y

    def fit_a04(Lq):
        X = (12.0 * Lq * Lq * ib_d * ib_d)[:, None]
        y = om * np.array([m.i_tilde_q for m in meas_d]) / ut - 1.0 / Lq
        return X, y

    X22, y22 = fit_a22(L_d, L_q)
    b22, inv22, r22 = ols_fit(X22, y22)
    s22 = _propagated_sigma(
        X22, inv22, om / ut * np.array([m.sigma_i_tilde_d for m in meas_c]),
        lambda Ld, Lq: ols_fit(*fit_a22(Ld, Lq))[0], [L_d, L_q], [sigma_L_d, sigma_L_q])

    X12, y12 = fit_a12(L_q)
    b12, inv12, r12 = ols_fit(X12, y12)
    s12 = _propagated_sigma(
        X12, inv12,
        om / ut * np.concatenate([[m.sigma_i_tilde_q for m in meas_c],
                                  [m.sigma_i_tilde_d for m in meas_d]]),
        lambda Lq: ols_fit(*fit_a12(Lq))[0], [L_q], [sigma_L_q])

    X04, y04 = fit_a04(L_q)
    b04, inv04, r04 = ols_fit(X04, y04)
    s04 = _propagated_sigma(
        X04, inv04, om / ut * np.array([m.sigma_i_tilde_q for m in meas_d]),
        lambda Lq: ols_fit(*fit_a04(Lq))[0], [L_q], [sigma_L_q])

    def rms(r):
        return float(np.sqrt(np.mean(np.asarray(r) ** 2)))

    return CrossEstimate(
        a22=float(b22[0]), a12=float(b12[0]), a04=float(b04[0]),
        sigma_a22=float(s22[0]), sigma_a12=float(s12[0]), sigma_a04=float(s04[0]),
        residual_rms_a22=rms(r22), residual_rms_a12=rms(r12), residual_rms_a04=rms(r04),
    )


def predict_ripple(p: MotorParams, spec: InjectionSpec) -> tuple[float, float]:
    """First-order ripple amplitudes for a locked-rotor injection run; the
    bias currents are u_bar/R."""
    ibd = spec.u_bar_d / p.R
    ibq = spec.u_bar_q / p.R
    utd, utq = spec.u_tilde_d, spec.u_tilde_q
    Ld, Lq = p.Ld, p.Lq
    i_tilde_d = (
        utd / Ld
        + 2.0 * p.a22 * Lq * ibq * (2.0 * Ld * ibd * utq + Lq * ibq * utd)
        + 12.0 * p.a40 * Ld * Ld * ibd * ibd * utd
        + 6.0 * p.a30 * Ld * ibd * utd
        + 2.0 * p.a12 * Lq * ibq * utq
    ) / spec.omega
    i_tilde_q = (
        utq / Lq
        + 2.0 * p.a22 * Ld * ibd * (2.0 * Lq * ibq * utd + Ld * ibd * utq)
        + 12.0 * p.a04 * Lq * Lq * ibq * ibq * utq
        + 2.0 * p.a12 * (Ld * ibd * utq + Lq * ibq * utd)
    ) / spec.omega
    return i_tilde_d, i_tilde_q


def estimate_from_records(records: Sequence[RunRecord], nominal: MotorParams,
                          plan: ExperimentPlan) -> EstimationResult:
    """Run the full estimation split on extracted measurements.

    R, phi_m and the pole count are passed through from `nominal`; the seven
    magnetic parameters are replaced by their estimates.
    """
    by_role: dict[str, list[RunRecord]] = {role: [] for role in ALL_ROLES}
    for rec in records:
        if rec.run.role not in by_role:
            raise ValueError(f"unknown run role {rec.run.role!r}")
        by_role[rec.run.role].append(rec)
    if not by_role[ROLE_LD] or not by_role[ROLE_LQ]:
        raise ValueError("plan must include both zero-bias runs")

    ind = estimate_L(by_role[ROLE_LD][0].meas, by_role[ROLE_LQ][0].meas, plan)
    d_ax = estimate_d_axis([r.meas for r in by_role[ROLE_D_SWEEP]],
                           ind.L_d, plan, ind.sigma_L_d)
    cross = estimate_cross([r.meas for r in by_role[ROLE_CROSS_D_INJ]],
                           [r.meas for r in by_role[ROLE_CROSS_Q_INJ]],
                           ind.L_d, ind.L_q, plan, ind.sigma_L_d, ind.sigma_L_q)
    params = dataclasses.replace(
        nominal, Ld=ind.L_d, Lq=ind.L_q,
        a30=d_ax.a30, a40=d_ax.a40, a22=cross.a22, a12=cross.a12, a04=cross.a04)
    sigma = {
        "Ld": ind.sigma_L_d, "Lq": ind.sigma_L_q,
        "a30": d_ax.sigma_a30, "a40": d_ax.sigma_a40,
        "a22": cross.sigma_a22, "a12": cross.sigma_a12, "a04": cross.sigma_a04,
    }
    residuals = {
        "d_axis": d_ax.residual_rms,
        "a22": cross.residual_rms_a22,
        "a12": cross.residual_rms_a12,
        "a04": cross.residual_rms_a04,
    }
    return EstimationResult(params=params, sigma=sigma, fit_residuals=residuals)


def measure_traces(runs: Sequence[PlanRun], traces: Sequence[Trace],
                   discard: float) -> list[RunRecord]:
    """Extract the ripple of each trace against its planned injection."""
    if len(runs) != len(traces):
        raise ValueError("one trace per planned run required")
    return [RunRecord(run, extract_ripple(trace, run.spec, discard))
            for run, trace in zip(runs, traces)]


def simulate_plan(motor: MotorParams, runs: Sequence[PlanRun], *,
                  steps_per_period: int = 200, measure_periods: int = 40,
                  noise_amp: float = 0.0, seed: int = 0,
                  discard: float | None = None,
                  theta_dot: float = 0.0) -> tuple[list[Trace], float]:
    """Simulate all planned runs as one lockstep batch.

    Returns the traces and the transient discard used to size them.
    """
    if not runs:
        return [], 0.0
    period = runs[0].spec.period
    if discard is None:
        discard = default_discard(motor, runs[0].spec)
    cfg = SimConfig(
        dt=period / steps_per_period,
        t_end=discard + measure_periods * period,
        theta_dot=theta_dot,
        noise_amp=noise_amp,
    )
    seeds = [seed + k for k in range(len(runs))]
    traces = simulate_batch(motor, [r.spec for r in runs], cfg, seeds)
    return traces, discard


def run_identification(motor: MotorParams, plan: ExperimentPlan, *,
                       steps_per_period: int = 200, measure_periods: int = 40,
                       noise_amp: float = 0.0, seed: int = 0,
                       discard: float | None = None) -> tuple[EstimationResult, list[RunRecord]]:
    """Simulate the whole plan against `motor` and estimate its magnetic
    parameters back; the closed-loop path used by tests and the CLI."""
    runs = plan_runs(plan, motor.R)
    traces, used_discard = simulate_plan(
        motor, runs, steps_per_period=steps_per_period,
        measure_periods=measure_periods, noise_amp=noise_amp, seed=seed,
        discard=discard)
    records = measure_traces(runs, traces, used_discard)
    result = estimate_from_records(records, motor, plan)
    return result, records

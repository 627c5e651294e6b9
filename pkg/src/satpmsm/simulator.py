"""Fixed-step integration of the electrical dynamics in flux coordinates.

State is the flux-linkage pair; the drive is a pulsating d-q voltage. The
integrator is classic RK4. For square-wave injection the step grid is
required to align with the switching instants (dt divides the half-period)
and each step evaluates the voltage one-sidedly, so every step integrates a
smooth piece and the nominal RK4 order survives the discontinuities.

Measurement noise is additive uniform on the sampled currents only; the flux
channels stay noise-free (they are internal state, not a measurement).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .injection import InjectionSpec, f_array, f_array_left
from .magnetics import FluxLinkage, MotorParams

_CSV_HEADER = ["t", "u_d", "u_q", "i_d", "i_q", "phi_d", "phi_q"]


class StepTooLarge(RuntimeError):
    """dt does not resolve the injection period (under-resolved ripple)."""


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    dt            integration step [s]
    t_end         run duration [s]
    theta_dot     electrical speed [rad/s]; 0 = locked rotor
    initial_flux  state at t = 0
    sample_period output sampling interval [s]; defaults to dt; must be an
                  integer multiple of dt
    noise_amp     half-width of the uniform current measurement noise [A]
    """

    dt: float
    t_end: float
    theta_dot: float = 0.0
    initial_flux: FluxLinkage = FluxLinkage(0.0, 0.0)
    sample_period: float | None = None
    noise_amp: float = 0.0

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.noise_amp < 0:
            raise ValueError("noise_amp must be >= 0")
        if self.sample_period is not None and self.sample_period < self.dt:
            raise ValueError("sample_period must be >= dt")

    def sample_stride(self) -> int:
        if self.sample_period is None:
            return 1
        stride = round(self.sample_period / self.dt)
        if stride < 1 or abs(stride * self.dt - self.sample_period) > 1e-9 * self.dt:
            raise ValueError("sample_period must be an integer multiple of dt")
        return stride


@dataclasses.dataclass(frozen=True)
class Trace:
    """Uniformly sampled record of one run.

    Voltages are the impressed values, currents may carry measurement noise,
    flux channels are the noise-free internal state (None for imported
    measurement data, which has no flux channel).
    """

    t: np.ndarray
    u_d: np.ndarray
    u_q: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    phi_d: np.ndarray | None = None
    phi_q: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in ("u_d", "u_q", "i_d", "i_q"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"channel {name} length mismatch")
        for name in ("phi_d", "phi_q"):
            ch = getattr(self, name)
            if ch is not None and len(ch) != n:
                raise ValueError(f"channel {name} length mismatch")
        if n >= 2:
            steps = np.diff(self.t)
            if np.any(steps <= 0):
                raise ValueError("t must be strictly increasing")
            if np.max(steps) - np.min(steps) > 1e-9 * float(steps[0]):
                raise ValueError("t must be uniformly sampled")

    @property
    def sample_period(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def with_noise(self, amp: float, seed: int) -> "Trace":
        """Copy with fresh uniform noise in [-amp, +amp] on the currents."""
        if amp == 0.0:
            return self
        rng = np.random.default_rng(seed)
        return dataclasses.replace(
            self,
            i_d=self.i_d + rng.uniform(-amp, amp, size=len(self.t)),
            i_q=self.i_q + rng.uniform(-amp, amp, size=len(self.t)),
        )

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(_CSV_HEADER) + "\n")
            has_flux = self.phi_d is not None and self.phi_q is not None
            for k in range(len(self.t)):
                row = [self.t[k], self.u_d[k], self.u_q[k], self.i_d[k], self.i_q[k]]
                if has_flux:
                    row += [self.phi_d[k], self.phi_q[k]]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @staticmethod
    def from_csv(path) -> "Trace":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            cols = {name: [] for name in header}
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                for name, field in zip(header, line.split(",")):
                    cols[name].append(float(field))
        for name in ("t", "u_d", "u_q", "i_d", "i_q"):
            if name not in cols:
                raise ValueError(f"trace CSV {path} missing column {name!r}")
        arrays = {name: np.asarray(vals, dtype=float) for name, vals in cols.items()}
        return Trace(
            t=arrays["t"],
            u_d=arrays["u_d"],
            u_q=arrays["u_q"],
            i_d=arrays["i_d"],
            i_q=arrays["i_q"],
            phi_d=arrays.get("phi_d"),
            phi_q=arrays.get("phi_q"),
        )


def _check_step(spec: InjectionSpec, cfg: SimConfig) -> None:
    period = spec.period
    if cfg.dt > period / 50.0:
        raise StepTooLarge(
            f"dt={cfg.dt:.3g}s exceeds 1/50 of the injection period {period:.3g}s")
    if spec.waveform.kind == "square":
        half = period / 2.0
        steps = half / cfg.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError(
                "square-wave switching instants must fall on step boundaries: "
                f"half-period {half:.6g}s is not an integer multiple of dt={cfg.dt:.6g}s")


def _batch_rk4(p: MotorParams, cfg: SimConfig, u_of_stage) -> tuple[np.ndarray, ...]:
    """Integrate dphi/dt = u - R*i(phi) + speed coupling for a batch of runs.

    u_of_stage(k, stage) returns per-run (u_d, u_q) arrays for step k at
    stage 0 (t_k), 1 (midpoint) or 2 (t_{k+1}, left-sided value).
    Returns sampled (t, phi_d, phi_q, i_d, i_q, u_d, u_q) arrays with the
    sample axis first.
    """
    dt = cfg.dt
    n_steps = int(round(cfg.t_end / dt))
    stride = cfg.sample_stride()
    Ld, Lq, R = p.Ld, p.Lq, p.R
    a30, a12, a40, a22, a04 = p.a30, p.a12, p.a40, p.a22, p.a04
    w = cfg.theta_dot
    phi_m = p.phi_m

    def rhs(fd, fq, u_d, u_q):
        i_d = fd / Ld + 3.0 * a30 * fd * fd + a12 * fq * fq + 4.0 * a40 * fd**3 + 2.0 * a22 * fd * fq * fq
        i_q = fq / Lq + 2.0 * a12 * fd * fq + 2.0 * a22 * fd * fd * fq + 4.0 * a04 * fq**3
        return u_d - R * i_d + w * fq, u_q - R * i_q - w * (fd + phi_m)

    def observed(fd, fq):
        i_d = fd / Ld + 3.0 * a30 * fd * fd + a12 * fq * fq + 4.0 * a40 * fd**3 + 2.0 * a22 * fd * fq * fq
        i_q = fq / Lq + 2.0 * a12 * fd * fq + 2.0 * a22 * fd * fd * fq + 4.0 * a04 * fq**3
        return i_d, i_q

    probe_u = u_of_stage(0, 0)
    n_runs = len(np.atleast_1d(probe_u[0]))
    fd = np.full(n_runs, cfg.initial_flux.phi_d, dtype=float)
    fq = np.full(n_runs, cfg.initial_flux.phi_q, dtype=float)

    n_samples = n_steps // stride + 1
    out_t = np.empty(n_samples)
    out_fd = np.empty((n_samples, n_runs))
    out_fq = np.empty((n_samples, n_runs))
    out_ud = np.empty((n_samples, n_runs))
    out_uq = np.empty((n_samples, n_runs))

    sample_idx = 0
    for k in range(n_steps + 1):
        if k % stride == 0:
            u_d, u_q = u_of_stage(k, 0)
            out_t[sample_idx] = k * dt
            out_fd[sample_idx] = fd
            out_fq[sample_idx] = fq
            out_ud[sample_idx] = u_d
            out_uq[sample_idx] = u_q
            sample_idx += 1
        if k == n_steps:
            break
        u0d, u0q = u_of_stage(k, 0)
        umd, umq = u_of_stage(k, 1)
        u1d, u1q = u_of_stage(k, 2)
        k1d, k1q = rhs(fd, fq, u0d, u0q)
        k2d, k2q = rhs(fd + 0.5 * dt * k1d, fq + 0.5 * dt * k1q, umd, umq)
        k3d, k3q = rhs(fd + 0.5 * dt * k2d, fq + 0.5 * dt * k2q, umd, umq)
        k4d, k4q = rhs(fd + dt * k3d, fq + dt * k3q, u1d, u1q)
        fd = fd + (dt / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        fq = fq + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)

    i_d, i_q = observed(out_fd, out_fq)
    return out_t, out_fd, out_fq, i_d, i_q, out_ud, out_uq


def simulate_batch(
    p: MotorParams,
    specs: Sequence[InjectionSpec],
    cfg: SimConfig,
    seeds: Sequence[int] | None = None,
) -> list[Trace]:
    """Integrate several runs that share the waveform, pulsation and config.

    The runs advance in lockstep as one vectorized state, which is what makes
    full identification sweeps affordable; per-run mean/ripple voltages are
    free to differ.
    """
    if not specs:
        return []
    w = specs[0].waveform
    omega = specs[0].omega
    for s in specs:
        if s.waveform != w or s.omega != omega:
            raise ValueError("batched runs must share waveform and omega")
        _check_step(s, cfg)
    if seeds is None:
        seeds = [0] * len(specs)
    if len(seeds) != len(specs):
        raise ValueError("need one seed per run")

    dt = cfg.dt
    n_steps = int(round(cfg.t_end / dt))
    if w.kind == "square":
        # switching instants sit on step boundaries (enforced above); derive
        # the sign from the integer step index, because the float phase
        # omega*dt*k eventually rounds to the wrong side of a boundary and a
        # single mis-sided stage kicks the flux by O(dt * u_tilde)
        steps_per_half = round(0.5 * specs[0].period / dt)
        halves = np.arange(n_steps + 1) // steps_per_half
        f0 = np.where(halves % 2 == 0, 1.0, -1.0)  # right-continuous at t_k
        fmid = f0[:-1]                             # step interior: same piece
        f1 = f0[:-1]                               # left-sided at t_{k+1}
    else:
        tau = omega * dt * np.arange(n_steps + 1)
        f0 = f_array(w, tau)                       # right-continuous at t_k
        fmid = f_array(w, tau[:-1] + 0.5 * omega * dt)
        f1 = f_array_left(w, tau[1:])              # left-sided at t_{k+1}

    ubar_d = np.array([s.u_bar_d for s in specs])
    ubar_q = np.array([s.u_bar_q for s in specs])
    util_d = np.array([s.u_tilde_d for s in specs])
    util_q = np.array([s.u_tilde_q for s in specs])

    def u_of_stage(k, stage):
        if stage == 0:
            fv = f0[k]
        elif stage == 1:
            fv = fmid[k]
        else:
            fv = f1[k]
        return ubar_d + util_d * fv, ubar_q + util_q * fv

    t, fd, fq, i_d, i_q, u_d, u_q = _batch_rk4(p, cfg, u_of_stage)
    traces = []
    for j, seed in enumerate(seeds):
        trace = Trace(
            t=t.copy(),
            u_d=u_d[:, j].copy(),
            u_q=u_q[:, j].copy(),
            i_d=i_d[:, j].copy(),
            i_q=i_q[:, j].copy(),
            phi_d=fd[:, j].copy(),
            phi_q=fq[:, j].copy(),
        )
        if cfg.noise_amp > 0:
            trace = trace.with_noise(cfg.noise_amp, int(seed))
        traces.append(trace)
    return traces


def simulate(p: MotorParams, spec: InjectionSpec, cfg: SimConfig, seed: int = 0) -> Trace:
    """Integrate one pulsating-voltage run; see the module docstring."""
    return simulate_batch(p, [spec], cfg, [seed])[0]


def simulate_averaged(p: MotorParams, u_bar_d: float, u_bar_q: float, cfg: SimConfig) -> Trace:
    """Integrate the ripple-free averaged system dphi/dt = u_bar - R*i(phi).

    Locked rotor only. Its trajectory tends to the constant flux solving
    u_bar = R*i(phi); deterministic, so noise settings are ignored.
    """
    if cfg.theta_dot != 0.0:
        raise ValueError("the averaged system is defined for locked rotor (theta_dot = 0)")
    ub_d = np.array([u_bar_d], dtype=float)
    ub_q = np.array([u_bar_q], dtype=float)

    def u_of_stage(k, stage):
        return ub_d, ub_q

    t, fd, fq, i_d, i_q, u_d, u_q = _batch_rk4(p, cfg, u_of_stage)
    return Trace(t=t, u_d=u_d[:, 0], u_q=u_q[:, 0], i_d=i_d[:, 0], i_q=i_q[:, 0],
                 phi_d=fd[:, 0], phi_q=fq[:, 0])


def default_dt(spec: InjectionSpec, steps_per_period: int = 200) -> float:
    """Default integration step: an even number of steps per period so the
    square wave switches on step boundaries."""
    if steps_per_period < 50 or steps_per_period % 2:
        raise ValueError("steps_per_period must be even and >= 50")
    return spec.period / steps_per_period

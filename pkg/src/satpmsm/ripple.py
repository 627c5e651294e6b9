"""Mean and ripple-amplitude extraction from a recorded run.

After the startup transient, each current channel is i_bar + i_tilde *
F(omega*t) up to the second-order remainder of the injection expansion. Both
coefficients are fit per axis by ordinary least squares on the basis
{1, F(omega*t)} over an integer number of whole periods; whole-period
windowing keeps the basis functions orthogonal, so the mean estimate is not
contaminated by the ripple and vice versa.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .injection import F_array, InjectionSpec
from .leastsq import ols_fit
from .magnetics import MotorParams
from .simulator import Trace

MIN_SAMPLES_PER_PERIOD = 16
MIN_WHOLE_PERIODS = 2


class TooShort(RuntimeError):
    """Fewer than two whole injection periods remain after the discard."""


class Unresolved(RuntimeError):
    """The trace sampling does not resolve the injection period."""


@dataclasses.dataclass(frozen=True)
class RippleMeasurement:
    """Per-axis mean currents, ripple amplitudes (coefficient of F), their
    standard errors from the fit, and fit diagnostics."""

    i_bar_d: float
    i_bar_q: float
    i_tilde_d: float
    i_tilde_q: float
    residual_rms_d: float
    residual_rms_q: float
    n_periods_used: int
    n_samples: int = 0
    sigma_i_bar_d: float = 0.0
    sigma_i_bar_q: float = 0.0
    sigma_i_tilde_d: float = 0.0
    sigma_i_tilde_q: float = 0.0

    def __post_init__(self) -> None:
        if self.residual_rms_d < 0 or self.residual_rms_q < 0:
            raise ValueError("residuals must be >= 0")
        if self.n_periods_used < 1:
            raise ValueError("n_periods_used must be >= 1")


def default_discard(p: MotorParams, spec: InjectionSpec) -> float:
    """Transient discard: seven electrical time constants, rounded up to
    whole injection periods."""
    t_settle = 7.0 * max(p.Ld, p.Lq) / p.R
    return math.ceil(t_settle / spec.period - 1e-9) * spec.period


def extract_ripple(trace: Trace, spec: InjectionSpec, discard: float) -> RippleMeasurement:
    """Fit i(t) ~ i_bar + i_tilde * F(omega*t) per axis after `discard`.

    The fit window is the largest whole number of injection periods that
    starts at the first sample at or after `discard`.
    """
    if discard < 0:
        raise ValueError("discard must be >= 0")
    period = spec.period
    sp = trace.sample_period
    if period / sp < MIN_SAMPLES_PER_PERIOD:
        raise Unresolved(
            f"{period / sp:.1f} samples per period < {MIN_SAMPLES_PER_PERIOD}")
    t = trace.t
    i0 = int(np.searchsorted(t, t[0] + discard - 1e-12 * sp))
    if i0 >= len(t):
        raise TooShort("discard exceeds the trace duration")
    span = t[-1] - t[i0]
    n_whole = int(math.floor(span / period + 1e-9))
    if n_whole < MIN_WHOLE_PERIODS:
        raise TooShort(
            f"only {n_whole} whole periods after discard, need {MIN_WHOLE_PERIODS}")
    n_win = int(math.floor(n_whole * period / sp + 1e-9))
    window = slice(i0, i0 + n_win)

    basis = np.column_stack([
        np.ones(n_win),
        F_array(spec.waveform, spec.omega * t[window]),
    ])

    def fit(y):
        beta, xtx_inv, resid = ols_fit(basis, y)
        rss = float(resid @ resid)
        rms = math.sqrt(rss / n_win)
        dof = max(n_win - 2, 1)
        s2 = rss / dof
        sig = np.sqrt(s2 * np.diag(xtx_inv))
        return float(beta[0]), float(beta[1]), rms, float(sig[0]), float(sig[1])

    bar_d, til_d, rms_d, sbar_d, stil_d = fit(trace.i_d[window])
    bar_q, til_q, rms_q, sbar_q, stil_q = fit(trace.i_q[window])
    return RippleMeasurement(
        i_bar_d=bar_d, i_bar_q=bar_q,
        i_tilde_d=til_d, i_tilde_q=til_q,
        residual_rms_d=rms_d, residual_rms_q=rms_q,
        n_periods_used=n_whole, n_samples=n_win,
        sigma_i_bar_d=sbar_d, sigma_i_bar_q=sbar_q,
        sigma_i_tilde_d=stil_d, sigma_i_tilde_q=stil_q,
    )

"""Magnetic model of a saturated PMSM in the rotor d-q frame.

The magnetic state is the flux-linkage pair (phi_d, phi_q); currents derive
from a scalar coenergy-style potential whose quadratic part is the usual
unsaturated 1/(2L) form and whose cubic/quartic terms capture saturation and
cross-saturation. Five coefficients (a30, a12, a40, a22, a04, subscripts =
powers of phi_d and phi_q) parameterize the nonlinear part; mirror symmetry
about the d axis removes the odd-in-phi_q monomials.

All quantities are SI: weber, ampere, henry, ohm, volt, rad/s.
"""

from __future__ import annotations

import dataclasses
import math


class NonConvergence(RuntimeError):
    """Newton inversion of the flux-current map failed to converge.

    Signals a current target outside the locally invertible region of the
    quartic model (the model is perturbative and not globally monotone).
    """


@dataclasses.dataclass(frozen=True)
class MotorParams:
    """Electrical and magnetic parameters of one motor.

    R       stator resistance [ohm]
    Ld, Lq  unsaturated self-inductances [henry]
    phi_m   permanent-magnet flux linkage [weber]
    n_pp    pole pairs
    a30,a12 cubic saturation coefficients [A/Wb^2]
    a40,a22,a04  quartic saturation coefficients [A/Wb^3]
    """

    R: float
    Ld: float
    Lq: float
    phi_m: float = 0.0
    n_pp: int = 1
    a30: float = 0.0
    a12: float = 0.0
    a40: float = 0.0
    a22: float = 0.0
    a04: float = 0.0

    def __post_init__(self) -> None:
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ValueError(f"R must be positive, got {self.R}")
        if not (self.Ld > 0 and math.isfinite(self.Ld)):
            raise ValueError(f"Ld must be positive, got {self.Ld}")
        if not (self.Lq > 0 and math.isfinite(self.Lq)):
            raise ValueError(f"Lq must be positive, got {self.Lq}")
        if int(self.n_pp) != self.n_pp or self.n_pp < 1:
            raise ValueError(f"n_pp must be an integer >= 1, got {self.n_pp}")
        for name in ("phi_m", "a30", "a12", "a40", "a22", "a04"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def without_saturation(self) -> "MotorParams":
        """Same motor with all saturation coefficients zeroed."""
        return dataclasses.replace(self, a30=0.0, a12=0.0, a40=0.0, a22=0.0, a04=0.0)


@dataclasses.dataclass(frozen=True)
class FluxLinkage:
    """d-q flux linkage pair [weber]."""

    phi_d: float
    phi_q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.phi_d) and math.isfinite(self.phi_q)):
            raise ValueError("flux linkage must be finite")


@dataclasses.dataclass(frozen=True)
class Currents:
    """d-q current pair [ampere]."""

    i_d: float
    i_q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.i_d) and math.isfinite(self.i_q)):
            raise ValueError("currents must be finite")


@dataclasses.dataclass(frozen=True)
class InductanceMatrix:
    """Differential (small-signal) inductance matrix d(phi)/d(i) [henry].

    Symmetric by construction: the off-diagonal entries are one shared value
    because the fluxes derive from a scalar potential.
    """

    L_dd: float
    L_dq: float
    L_qd: float
    L_qq: float

    def __post_init__(self) -> None:
        if self.L_dq != self.L_qd:
            raise ValueError("inductance matrix must be symmetric")


def energy(p: MotorParams, f: FluxLinkage) -> float:
    """Magnetic potential H(phi_d, phi_q); H(0,0) = 0.

    Quadratic part phi_d^2/(2 Ld) + phi_q^2/(2 Lq) plus the five saturation
    monomials. Only its gradient is physical; the absolute scale is exposed
    for testing.
    """
    fd, fq = f.phi_d, f.phi_q
    fd2, fq2 = fd * fd, fq * fq
    quad = fd2 / (2.0 * p.Ld) + fq2 / (2.0 * p.Lq)
    return (
        quad
        + p.a30 * fd2 * fd
        + p.a12 * fd * fq2
        + p.a40 * fd2 * fd2
        + p.a22 * fd2 * fq2
        + p.a04 * fq2 * fq2
    )


def currents_from_flux(p: MotorParams, f: FluxLinkage) -> Currents:
    """Currents as the gradient of `energy` (the magnetization curves)."""
    fd, fq = f.phi_d, f.phi_q
    fd2, fq2 = fd * fd, fq * fq
    i_d = fd / p.Ld + 3.0 * p.a30 * fd2 + p.a12 * fq2 + 4.0 * p.a40 * fd2 * fd + 2.0 * p.a22 * fd * fq2
    i_q = fq / p.Lq + 2.0 * p.a12 * fd * fq + 2.0 * p.a22 * fd2 * fq + 4.0 * p.a04 * fq2 * fq
    return Currents(i_d, i_q)


def _hessian(p: MotorParams, fd: float, fq: float) -> tuple[float, float, float]:
    """Second derivatives (H_dd, H_dq, H_qq) of `energy` at (fd, fq).

    H_dq == H_qd exactly; this inverse-inductance matrix drives both the
    Newton inversion and the ripple predictions.
    """
    h_dd = 1.0 / p.Ld + 6.0 * p.a30 * fd + 12.0 * p.a40 * fd * fd + 2.0 * p.a22 * fq * fq
    h_dq = 2.0 * p.a12 * fq + 4.0 * p.a22 * fd * fq
    h_qq = 1.0 / p.Lq + 2.0 * p.a12 * fd + 2.0 * p.a22 * fd * fd + 12.0 * p.a04 * fq * fq
    return h_dd, h_dq, h_qq


def flux_from_currents_first_order(p: MotorParams, i: Currents) -> FluxLinkage:
    """Explicit flux-from-current inversion, first order in the saturation
    coefficients (the O(|a|^2) remainder is dropped)."""
    i_d, i_q = i.i_d, i.i_q
    Ld, Lq = p.Ld, p.Lq
    phi_d = Ld * (
        i_d
        - 3.0 * p.a30 * Ld * Ld * i_d * i_d
        - p.a12 * Lq * Lq * i_q * i_q
        - 4.0 * p.a40 * Ld**3 * i_d**3
        - 2.0 * p.a22 * Ld * Lq * Lq * i_d * i_q * i_q
    )
    phi_q = Lq * (
        i_q
        - 2.0 * p.a12 * Ld * Lq * i_d * i_q
        - 2.0 * p.a22 * Ld * Ld * Lq * i_d * i_d * i_q
        - 4.0 * p.a04 * Lq**3 * i_q**3
    )
    return FluxLinkage(phi_d, phi_q)


_NEWTON_MAX_ITER = 50
_NEWTON_MAX_HALVINGS = 40


def flux_from_currents_exact(p: MotorParams, i: Currents, tol: float = 1e-12) -> FluxLinkage:
    """Numerically exact flux-from-current inversion.

    Damped Newton on currents_from_flux, seeded at the first-order inversion;
    the step is halved while the current residual grows. Convergence means
    both current components match the target within `tol` amperes.

    Raises NonConvergence when the iteration stalls, which in practice means
    the target lies outside the locally invertible region of the quartic
    model (no global invertibility analysis is attempted).
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    seed = flux_from_currents_first_order(p, i)
    fd, fq = seed.phi_d, seed.phi_q
    if not (math.isfinite(fd) and math.isfinite(fq)):
        raise NonConvergence(f"first-order seed not finite for target {i}")

    def residual(fd: float, fq: float) -> tuple[float, float]:
        c = currents_from_flux(p, FluxLinkage(fd, fq))
        return c.i_d - i.i_d, c.i_q - i.i_q

    rd, rq = residual(fd, fq)
    for _ in range(_NEWTON_MAX_ITER):
        if abs(rd) <= tol and abs(rq) <= tol:
            return FluxLinkage(fd, fq)
        h_dd, h_dq, h_qq = _hessian(p, fd, fq)
        det = h_dd * h_qq - h_dq * h_dq
        if det == 0.0 or not math.isfinite(det):
            raise NonConvergence(f"singular Jacobian at ({fd:.6g}, {fq:.6g}) for target {i}")
        step_d = -(h_qq * rd - h_dq * rq) / det
        step_q = -(h_dd * rq - h_dq * rd) / det
        norm0 = rd * rd + rq * rq
        lam = 1.0
        for _ in range(_NEWTON_MAX_HALVINGS):
            nd, nq = fd + lam * step_d, fq + lam * step_q
            rd_n, rq_n = residual(nd, nq)
            if rd_n * rd_n + rq_n * rq_n < norm0:
                fd, fq, rd, rq = nd, nq, rd_n, rq_n
                break
            lam *= 0.5
        else:
            raise NonConvergence(f"line search stalled at ({fd:.6g}, {fq:.6g}) for target {i}")
    if abs(rd) <= tol and abs(rq) <= tol:
        return FluxLinkage(fd, fq)
    raise NonConvergence(f"no convergence within {_NEWTON_MAX_ITER} iterations for target {i}")


def inductance_matrix(p: MotorParams, i: Currents) -> InductanceMatrix:
    """Differential inductance matrix, first order in the saturation
    coefficients, evaluated at a current operating point.

    These are the derivatives of the first-order flux maps; structurally
    L_dq == L_qd. At zero current (or zero coefficients) it reduces to
    diag(Ld, Lq).
    """
    i_d, i_q = i.i_d, i.i_q
    Ld, Lq = p.Ld, p.Lq
    l_dd = Ld * (
        1.0
        - 6.0 * p.a30 * Ld * Ld * i_d
        - 12.0 * p.a40 * Ld**3 * i_d * i_d
        - 2.0 * p.a22 * Ld * Lq * Lq * i_q * i_q
    )
    l_dq = -2.0 * Ld * Lq * Lq * i_q * (p.a12 + 2.0 * p.a22 * Ld * i_d)
    l_qq = Lq * (
        1.0
        - 2.0 * p.a12 * Ld * Lq * i_d
        - 2.0 * p.a22 * Ld * Ld * Lq * i_d * i_d
        - 12.0 * p.a04 * Lq**3 * i_q * i_q
    )
    return InductanceMatrix(L_dd=l_dd, L_dq=l_dq, L_qd=l_dq, L_qq=l_qq)

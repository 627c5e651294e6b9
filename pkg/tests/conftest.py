import pytest

from satpmsm.magnetics import MotorParams


@pytest.fixture
def ipm() -> MotorParams:
    """Interior-magnet motor: estimated magnetic parameters + rated resistance."""
    return MotorParams(
        R=12.15, Ld=91.9e-3, Lq=45.8e-3, phi_m=0.0, n_pp=6,
        a30=7.70, a12=5.35, a40=19.42, a22=22.18, a04=6.62,
    )


@pytest.fixture
def spm() -> MotorParams:
    """Surface-mounted motor: estimated magnetic parameters + rated resistance."""
    return MotorParams(
        R=6.69, Ld=155.4e-3, Lq=58.6e-3, phi_m=0.0, n_pp=2,
        a30=5.01, a12=4.83, a40=1.83, a22=8.76, a04=1.18,
    )

"""Saturated-PMSM toolkit: energy-based magnetic model, pulsating-voltage
injection simulator, ripple extraction and magnetic-parameter identification.
"""

from .injection import F_eval, InjectionSpec, Waveform, f_eval, voltage_at
from .magnetics import (
    Currents,
    FluxLinkage,
    InductanceMatrix,
    MotorParams,
    NonConvergence,
    currents_from_flux,
    energy,
    flux_from_currents_exact,
    flux_from_currents_first_order,
    inductance_matrix,
)
from .simulator import SimConfig, StepTooLarge, Trace, simulate, simulate_averaged
from .ripple import RippleMeasurement, TooShort, Unresolved, default_discard, extract_ripple
from .estimator import (
    EstimationResult,
    ExperimentPlan,
    PlanRun,
    ZeroRipple,
    estimate_cross,
    estimate_d_axis,
    estimate_from_records,
    estimate_L,
    plan_runs,
    predict_ripple,
    run_identification,
)
from .leastsq import RankDeficient
from .validation import (
    SweepSpec,
    angle_sweep,
    flux_by_integration,
    magnetization_curves,
    step_response,
)

__version__ = "0.1.0"

__all__ = [
    "Currents",
    "EstimationResult",
    "ExperimentPlan",
    "FluxLinkage",
    "F_eval",
    "InductanceMatrix",
    "InjectionSpec",
    "MotorParams",
    "NonConvergence",
    "PlanRun",
    "RankDeficient",
    "RippleMeasurement",
    "SimConfig",
    "StepTooLarge",
    "SweepSpec",
    "TooShort",
    "Trace",
    "Unresolved",
    "Waveform",
    "ZeroRipple",
    "angle_sweep",
    "currents_from_flux",
    "default_discard",
    "energy",
    "estimate_L",
    "estimate_cross",
    "estimate_d_axis",
    "estimate_from_records",
    "extract_ripple",
    "f_eval",
    "flux_by_integration",
    "flux_from_currents_exact",
    "flux_from_currents_first_order",
    "inductance_matrix",
    "magnetization_curves",
    "plan_runs",
    "predict_ripple",
    "run_identification",
    "simulate",
    "simulate_averaged",
    "step_response",
    "voltage_at",
]

"""Quasi-static NEGF thermodynamics of a driven level coupled to tight-binding leads."""

from ._core import (
    BoundState,
    BoundStateHit,
    ChainReservoir,
    ConfigError,
    Ensemble,
    FiniteThermo,
    LeadSpectrum,
    Model,
    ModelKind,
    ProtocolResult,
    Ramp,
    RampShape,
    Segment,
    Snapshot,
    bound_states,
    entropy_kernel,
    fermi,
    finite_thermo,
    grand_kernel,
    run_protocol,
    run_scenario,
    scenario_names,
    self_energy,
    snapshot,
)

__all__ = [
    "BoundState",
    "BoundStateHit",
    "ChainReservoir",
    "ConfigError",
    "Ensemble",
    "FiniteThermo",
    "LeadSpectrum",
    "Model",
    "ModelKind",
    "ProtocolResult",
    "Ramp",
    "RampShape",
    "Segment",
    "Snapshot",
    "bound_states",
    "entropy_kernel",
    "fermi",
    "finite_thermo",
    "grand_kernel",
    "run_protocol",
    "run_scenario",
    "scenario_names",
    "self_energy",
    "snapshot",
]

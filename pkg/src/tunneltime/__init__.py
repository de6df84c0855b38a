"""Arrival-time statistics of tunneling wavepackets from a band-limited time operator."""

__version__ = "0.1.0"

from .arrival import (
    ArrivalReport,
    ArrivalScenario,
    arrival_analysis,
    arrival_state,
    keldysh_time,
    project_right,
    reconstruct_position,
    traversal_time,
)
from .band import (
    BandGrid,
    ChannelAmplitude,
    GaugePhase,
    arrival_gauge,
    constant_gauge,
    cos2_amplitude,
    differentiate,
    gauge_transform,
    make_band,
    quadrature,
)
from .config import RunConfig
from .exceptions import NumericalFailure, ValidationError
from .scattering import PotentialSpec, amplitudes, scattering_table, transfer_matrix
from .timeop import (
    distribution,
    eigenfunction,
    eigenstate_overlap,
    energy_shift,
    evolve,
    expectation_energy_rep,
    time_variance,
    variance_decomposition,
)

__all__ = [
    "ArrivalReport",
    "ArrivalScenario",
    "BandGrid",
    "ChannelAmplitude",
    "GaugePhase",
    "NumericalFailure",
    "PotentialSpec",
    "RunConfig",
    "ValidationError",
    "amplitudes",
    "arrival_analysis",
    "arrival_gauge",
    "arrival_state",
    "constant_gauge",
    "cos2_amplitude",
    "differentiate",
    "distribution",
    "eigenfunction",
    "eigenstate_overlap",
    "energy_shift",
    "evolve",
    "expectation_energy_rep",
    "gauge_transform",
    "keldysh_time",
    "make_band",
    "project_right",
    "quadrature",
    "reconstruct_position",
    "scattering_table",
    "time_variance",
    "transfer_matrix",
    "traversal_time",
    "variance_decomposition",
]

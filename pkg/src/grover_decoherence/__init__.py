"""Grover search on a two-qubit register under engineered Lorentzian noise.

Monte-Carlo ensembles of noisy unitary runs are cross-checked against
Bloch-Redfield predictions built from the same noise spectrum.
"""

__version__ = "0.1.0"

from .calibration import CnotCalibration, calibrate_cnot, cnot_fidelity
from .grover import GroverResult, PurityScan, grover_purity_scan, run_noiseless, run_noisy_ensemble, run_redfield
from .noise import NoiseTrace, Reservoir, estimate_psd, generate_ensemble, generate_trace, reservoir_presets
from .plan import GatePlan, build_gate_plan, preset_plan
from .propagation import EvolutionConfig, ensemble_average, evolve_under_trace, segment_propagator
from .redfield import RedfieldGenerator, integrate, redfield_rates, relaxation_tensor
from .system import SystemModel, SystemParams, coupling_in_energy_basis, transition_frequency

__all__ = [
    "CnotCalibration", "calibrate_cnot", "cnot_fidelity",
    "GroverResult", "PurityScan", "grover_purity_scan", "run_noiseless", "run_noisy_ensemble", "run_redfield",
    "NoiseTrace", "Reservoir", "estimate_psd", "generate_ensemble", "generate_trace", "reservoir_presets",
    "GatePlan", "build_gate_plan", "preset_plan",
    "EvolutionConfig", "ensemble_average", "evolve_under_trace", "segment_propagator",
    "RedfieldGenerator", "integrate", "redfield_rates", "relaxation_tensor",
    "SystemModel", "SystemParams", "coupling_in_energy_basis", "transition_frequency",
]

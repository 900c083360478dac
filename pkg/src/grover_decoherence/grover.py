"""Running the Grover schedule: noiseless, Monte-Carlo noisy and Redfield.

Every engine produces a 16x16 channel (row-major superoperator) for the
whole schedule, so the same code serves single runs from the uniform
superposition and the 36-input purity average.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Optional, Sequence

import numpy as np

from .memory import memory_channel, superop
from .noise import (NoiseTrace, Reservoir, generate_ensemble, segment_correlation, stack_values,
                    static_variance)
from .plan import GatePlan, IdealGate, plan_unitary
from .propagation import EvolutionConfig, TraceExhaustedError, block_unitaries
from .quantum import ket_to_dm, overlap_fidelity, propagator, purity
from .redfield import RedfieldGenerator, check_state
from .system import SystemModel, coupling_in_energy_basis

REDFIELD_MODES = ("memory", "markov")
MC_CHUNK = 1000

SINGLE_QUBIT_STATES = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, -1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
    np.array([1, -1j], dtype=complex) / np.sqrt(2),
)


def input_states():
    """The 36 product states built from the six axis states of each qubit."""
    return [np.kron(a, b) for a, b in product(SINGLE_QUBIT_STATES, repeat=2)]


def apply_channel(channel: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return (channel @ rho.reshape(-1)).reshape(d, d)


def average_purity(channel: np.ndarray) -> float:
    """Mean output purity over the 36 product inputs."""
    return float(np.mean([purity(apply_channel(channel, ket_to_dm(psi))) for psi in input_states()]))


@dataclass(frozen=True, eq=False)
class GroverResult:
    rho_final: np.ndarray = field(repr=False)
    success_prob: float
    f_rho: float
    purity: float
    per_trace_purities: np.ndarray = field(default=None, repr=False)
    per_trace_success: np.ndarray = field(default=None, repr=False)
    engine: str = "noiseless"
    n_traces: int = 0

    def metrics(self) -> dict:
        return {"engine": self.engine, "success_prob": self.success_prob, "f_rho": self.f_rho,
                "purity": self.purity, "M": self.n_traces}


def _rho_in(plan: GatePlan, rho_in):
    return ket_to_dm(plan.initial_state) if rho_in is None else np.asarray(rho_in, dtype=complex)


def _result(plan, rho, reference, engine, **kw) -> GroverResult:
    ref = rho if reference is None else reference
    p = float(rho[plan.target_index, plan.target_index].real)
    return GroverResult(rho, p, overlap_fidelity(ref, rho), purity(rho), engine=engine, **kw)


def noiseless_unitary(plan: GatePlan, model: SystemModel) -> np.ndarray:
    return plan_unitary(plan, lambda st: propagator(model.h_s, st.duration))


def run_noiseless(plan: GatePlan, model: SystemModel, rho_in=None) -> GroverResult:
    u = noiseless_unitary(plan, model)
    rho = u @ _rho_in(plan, rho_in) @ u.conj().T
    return _result(plan, rho, None, "noiseless")


def trace_unitaries(plan: GatePlan, model: SystemModel, values: np.ndarray, cfg: EvolutionConfig) -> np.ndarray:
    """Whole-schedule unitary for each row of ``values`` (shape (M, n))."""
    values = np.atleast_2d(values)
    if values.shape[1] < plan.n_segments:
        raise TraceExhaustedError(f"traces have {values.shape[1]} segments, the plan needs {plan.n_segments}")
    if abs(cfg.tau - plan.tau) > 1e-15:
        raise ValueError("evolution config tau differs from the plan's segment length")
    cfg.check(model)
    out = []
    for lo in range(0, values.shape[0], MC_CHUNK):
        chunk = values[lo:lo + MC_CHUNK]
        u = np.broadcast_to(np.eye(4, dtype=complex), (chunk.shape[0], 4, 4)).copy()
        pos = 0
        for st in plan.steps:
            if isinstance(st, IdealGate):
                u = st.unitary @ u
            else:
                u = block_unitaries(model, cfg, chunk[:, pos:pos + st.n_segments]) @ u
                pos += st.n_segments
        out.append(u)
    return np.concatenate(out)


def _check_traces(plan: GatePlan, traces: Sequence[NoiseTrace]) -> np.ndarray:
    vals = stack_values(traces)
    if abs(traces[0].tau - plan.tau) > 1e-15:
        raise ValueError("trace tau differs from the plan's segment length")
    return vals


def run_noisy_ensemble(plan: GatePlan, model: SystemModel, traces: Sequence[NoiseTrace], cfg: EvolutionConfig,
                       rho_in=None, reference: Optional[np.ndarray] = None) -> GroverResult:
    """Per-trace unitary runs averaged into one mixed state.

    ``reference`` is the noiseless output used for f_rho; it is computed when
    not supplied.
    """
    vals = _check_traces(plan, traces)
    rho0 = _rho_in(plan, rho_in)
    if reference is None:
        reference = run_noiseless(plan, model, rho0).rho_final
    u = trace_unitaries(plan, model, vals, cfg)
    rhos = u @ rho0 @ np.swapaxes(u.conj(), -1, -2)
    rho = rhos.mean(axis=0)
    per_purity = np.einsum("kij,kji->k", rhos, rhos).real
    per_success = rhos[:, plan.target_index, plan.target_index].real
    return _result(plan, rho, reference, "montecarlo", per_trace_purities=per_purity,
                   per_trace_success=per_success, n_traces=len(traces))


def monte_carlo_channel(plan: GatePlan, model: SystemModel, traces: Sequence[NoiseTrace],
                        cfg: EvolutionConfig) -> np.ndarray:
    u = trace_unitaries(plan, model, _check_traces(plan, traces), cfg)
    return np.einsum("kij,kab->iajb", u, u.conj()).reshape(16, 16) / len(u)


def markov_channel(plan: GatePlan, gen: RedfieldGenerator) -> np.ndarray:
    """Schedule channel with each evolution block integrated by ``gen``."""
    total = np.eye(16, dtype=complex)
    cache = {}
    for st in plan.steps:
        if isinstance(st, IdealGate):
            total = superop(st.unitary) @ total
        else:
            key = st.n_segments
            if key not in cache:
                cache[key] = gen.propagator(st.duration)
            total = cache[key] @ total
    return total


def redfield_channel(plan: GatePlan, model: SystemModel, coupling: str, reservoir: Reservoir, alpha: float,
                     mode: str = "memory", backend: str = "fft", substeps: int = 8) -> np.ndarray:
    """Ensemble channel predicted without sampling.

    ``mode="markov"`` uses the time-independent Redfield generator per block;
    ``mode="memory"`` integrates the finite-memory equation over the whole
    schedule with the correlation of the ``backend`` traces.
    """
    if mode == "markov":
        return markov_channel(plan, RedfieldGenerator.build(model, coupling, reservoir, alpha))
    if mode != "memory":
        raise ValueError(f"unknown Redfield mode {mode!r}; choose from {REDFIELD_MODES}")
    a = coupling_in_energy_basis(model, coupling).computational_basis
    corr = segment_correlation(reservoir, plan.n_segments, plan.tau, backend)
    var0 = static_variance(reservoir, plan.n_segments, plan.tau, backend)
    return memory_channel(model.h_s, a, plan, corr, alpha, var0, substeps)


def run_redfield(plan: GatePlan, model: SystemModel, coupling: str, reservoir: Reservoir, alpha: float,
                 mode: str = "memory", backend: str = "fft", rho_in=None,
                 reference: Optional[np.ndarray] = None) -> GroverResult:
    rho0 = _rho_in(plan, rho_in)
    if reference is None:
        reference = run_noiseless(plan, model, rho0).rho_final
    ch = redfield_channel(plan, model, coupling, reservoir, alpha, mode, backend)
    rho = check_state(apply_channel(ch, rho0))
    return _result(plan, rho, reference, f"redfield-{mode}")


@dataclass(frozen=True)
class PurityScan:
    alphas: tuple
    purities: tuple
    system: str
    reservoir: str
    coupling: str


def scan_point(plan, model, coupling, reservoir, alpha, engine="redfield", mode="memory", backend="fft",
               n_traces=100, seed=0, method="exact", normalization="ensemble") -> float:
    """Average 36-input purity at one coupling strength."""
    if engine == "redfield":
        ch = redfield_channel(plan, model, coupling, reservoir, alpha, mode, backend)
    elif engine == "montecarlo":
        traces = generate_ensemble(reservoir, n_traces, plan.n_segments, plan.tau, seed, backend, normalization)
        cfg = EvolutionConfig(method, plan.tau, alpha, coupling_in_energy_basis(model, coupling))
        ch = monte_carlo_channel(plan, model, traces, cfg)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return average_purity(ch)


def grover_purity_scan(plans: Dict[str, tuple], reservoir: Reservoir, coupling: str, alphas: Sequence[float],
                       threads: int = 1, **kw) -> Dict[str, PurityScan]:
    """Purity versus coupling strength for several systems.

    ``plans`` maps a system label to ``(model, plan)``. Work items are
    independent and their results are collected in input order, so the
    output does not depend on ``threads``.
    """
    items = [(label, a) for label in plans for a in alphas]

    def work(item):
        label, a = item
        model, plan = plans[label]
        return scan_point(plan, model, coupling, reservoir, float(a), **kw)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(work, items))
    else:
        vals = [work(it) for it in items]
    out = {}
    for i, label in enumerate(plans):
        chunk = vals[i * len(alphas):(i + 1) * len(alphas)]
        out[label] = PurityScan(tuple(float(a) for a in alphas), tuple(chunk), label, reservoir.label, coupling)
    return out


def result_json(result: GroverResult, system: str, reservoir: str, coupling: str, alpha_hz: float,
                meta: Optional[dict] = None) -> str:
    doc = {"system": system, "reservoir": reservoir, "coupling": coupling, "alpha_hz": alpha_hz,
           "M": result.n_traces, "success_prob": result.success_prob, "f_rho": result.f_rho,
           "purity": result.purity}
    if meta:
        doc = {"meta": meta, **doc}
    return json.dumps(doc, indent=2)

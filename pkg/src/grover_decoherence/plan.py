"""Gate schedules for the two-qubit Grover search.

One Grover iteration on two qubits is G = W12 I00 W12 I11, applied to the
uniform superposition W12|00>. The marking operator is built from the
CNOT, I11 = W2 C W2, and I00 = exp(i pi/2 (Z1 + Z2)) I11. Every CNOT is
realised by free evolution of calibrated duration followed (in the
operator product, preceded in time) by an ideal R_z1 compensation; all
single-qubit gates are ideal and instantaneous.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .calibration import CNOT, CnotCalibration, nearest_calibration, rz1
from .quantum import HADAMARD, IDENTITY2, SIGMA_X, kron, propagator
from .system import SystemModel, Z1, Z2

PRESET_SEGMENT = 304.38e-6

W12 = kron(HADAMARD, HADAMARD)
W2 = kron(IDENTITY2, HADAMARD)
PHASE_ZZ = expm(0.5j * np.pi * (Z1 + Z2))  # equals -Z1 Z2

# (segments per CNOT, CNOT power of each block, target CNOT time, segment length)
PRESET_LAYOUT = {
    "SystemI": (20, (1, 3), 6.15e-3, PRESET_SEGMENT),
    "SystemII": (40, (1, 1), 12.18e-3, PRESET_SEGMENT),
    "Custom": (40, (1, 1), None, None),
}
TIMINGS = ("grid", "calibrated")


@dataclass(frozen=True, eq=False)
class IdealGate:
    unitary: np.ndarray = field(repr=False)
    label: str = ""
    qubits: Tuple[int, ...] = (1, 2)


@dataclass(frozen=True)
class TwoQubitEvolution:
    """Free evolution over ``n_segments`` noise segments of length ``tau``."""

    n_segments: int
    tau: float
    label: str = ""

    @property
    def duration(self) -> float:
        return self.n_segments * self.tau


Step = Union[IdealGate, TwoQubitEvolution]


@dataclass(frozen=True, eq=False)
class GatePlan:
    """Ordered schedule (first element applied first) acting on an input state.

    The preparation W12|00> is not part of ``steps``: the plan is the
    Grover operator G itself, and ``initial_state`` is the uniform
    superposition it is normally applied to.
    """

    system: str
    steps: Tuple[Step, ...]
    tau: float
    target: str = "11"
    calibration: Optional[CnotCalibration] = None
    compensation: Tuple[float, ...] = ()

    @property
    def evolutions(self):
        return [s for s in self.steps if isinstance(s, TwoQubitEvolution)]

    @property
    def n_segments(self) -> int:
        return sum(s.n_segments for s in self.evolutions)

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.evolutions)

    @property
    def initial_state(self) -> np.ndarray:
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1.0
        return W12 @ psi

    @property
    def target_index(self) -> int:
        return int(self.target, 2)


def _flip(target: str) -> np.ndarray:
    """X on every qubit whose target bit is 0; maps |target> to |11>."""
    ops = [IDENTITY2 if b == "1" else SIGMA_X for b in target]
    return kron(*ops)


def _steps(target, comp1, comp2, block1, block2):
    # the marking operator for |x> is X_x I11 X_x
    flip = [IdealGate(_flip(target), "X retarget")] if target != "11" else []
    seq = flip + [
        IdealGate(W2 @ rz1(-comp1), "W2 Rz1"),
        block1,
        IdealGate(W2, "W2"),
    ] + flip + [
        IdealGate(W12, "W12"),
        IdealGate(W2 @ rz1(-comp2), "W2 Rz1"),
        block2,
        IdealGate(W2, "W2"),
        IdealGate(PHASE_ZZ, "phase"),
        IdealGate(W12, "W12"),
    ]
    return tuple(seq)


def plan_unitary(plan: GatePlan, block_unitary) -> np.ndarray:
    """Total unitary of a plan given a callable for each evolution block."""
    u = np.eye(4, dtype=complex)
    for st in plan.steps:
        u = (st.unitary if isinstance(st, IdealGate) else block_unitary(st)) @ u
    return u


def ideal_plan(target: str = "11") -> GatePlan:
    """Plan whose evolution blocks are exact CNOTs (instantaneous)."""
    ev = TwoQubitEvolution(0, 1.0, "ideal CNOT")
    return GatePlan("ideal", _steps(target, 0.0, 0.0, ev, ev), 1.0, target)


def ideal_unitary(target: str = "11") -> np.ndarray:
    return plan_unitary(ideal_plan(target), lambda st: CNOT)


def noiseless_success(plan: GatePlan, model: SystemModel) -> float:
    u = plan_unitary(plan, lambda st: propagator(model.h_s, st.duration))
    amp = (u @ plan.initial_state)[plan.target_index]
    return float(abs(amp) ** 2)


def build_gate_plan(model: SystemModel, cal: CnotCalibration, *, segments_per_cnot: Optional[int] = None,
                    powers: Optional[Tuple[int, int]] = None, tau: Optional[float] = None,
                    timing: str = "grid", target: str = "11", refine_compensation: bool = True) -> GatePlan:
    """Assemble the Grover schedule from a CNOT calibration.

    Parameters
    ----------
    model : SystemModel
    cal : CnotCalibration
        Calibrated CNOT-equivalent evolution for this system.
    segments_per_cnot : int, optional
        Noise segments per CNOT; defaults to 20 for System I and 40 otherwise.
    powers : (int, int), optional
        CNOT power realised by each of the two blocks, (1, 3) for System I and
        (1, 1) otherwise. CNOT^3 is a CNOT, but three times as long.
    tau : float, optional
        Explicit segment length; overrides ``timing``.
    timing : {"grid", "calibrated"}
        ``"grid"`` uses the preset's fixed 304.38 us segment (the block
        durations then miss t_C slightly); ``"calibrated"`` uses
        ``t_C / segments_per_cnot`` so each block lasts exactly a multiple of
        t_C. Custom systems have no fixed grid and always use the latter.
    target : str
        Marked basis state, ``"11"`` by default.
    refine_compensation : bool
        Re-optimise the two R_z1 compensation angles for the noiseless
        success probability, starting from the calibrated phases.
    """
    if cal.fidelity < 0.999:
        raise ValueError(f"calibration fidelity {cal.fidelity:.6f} is below 0.999")
    if len(target) != 2 or set(target) - {"0", "1"}:
        raise ValueError(f"target must be a two-bit string, got {target!r}")
    if timing not in TIMINGS:
        raise ValueError(f"unknown timing {timing!r}; choose from {TIMINGS}")
    n_default, p_default, _, grid_tau = PRESET_LAYOUT.get(model.label, PRESET_LAYOUT["Custom"])
    n_cnot = segments_per_cnot or n_default
    p1, p2 = powers or p_default
    if tau is None:
        tau = grid_tau if (timing == "grid" and grid_tau) else cal.t_c / n_cnot
    tau = float(tau)
    if not tau > 0:
        raise ValueError("tau must be positive")
    b1 = TwoQubitEvolution(p1 * n_cnot, tau, f"CNOT^{p1}")
    b2 = TwoQubitEvolution(p2 * n_cnot, tau, f"CNOT^{p2}")
    comp = np.array([p1 * cal.phi_c, p2 * cal.phi_c])

    def make(c):
        return GatePlan(model.label, _steps(target, c[0], c[1], b1, b2), tau, target, cal, (float(c[0]), float(c[1])))

    plan = make(comp)
    if refine_compensation:
        res = minimize(lambda c: 1.0 - noiseless_success(make(c), model), comp, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if noiseless_success(make(res.x), model) >= noiseless_success(plan, model):
            plan = make(res.x)
    return plan


def preset_plan(model: SystemModel, cals, **kw) -> GatePlan:
    """Plan for a preset system, using the calibration nearest its target time."""
    _, _, t_target, _ = PRESET_LAYOUT.get(model.label, PRESET_LAYOUT["Custom"])
    cal = nearest_calibration(cals, t_target) if t_target else max(cals, key=lambda c: c.fidelity)
    return build_gate_plan(model, cal, **kw)


def with_tau(plan: GatePlan, tau: float) -> GatePlan:
    steps = tuple(replace(s, tau=tau) if isinstance(s, TwoQubitEvolution) else s for s in plan.steps)
    return replace(plan, steps=steps, tau=tau)

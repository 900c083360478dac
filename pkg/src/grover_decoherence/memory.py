"""Finite-memory Bloch-Redfield propagation over a whole gate schedule.

The Markovian generator assumes the noise decorrelates quickly compared with
the system dynamics. Here the correlation time 1/Gamma = 10 ms is comparable
to a gate, so instead the second-order time-convolutionless equation is
integrated in the interaction picture of the noiseless schedule U0(t)
(free evolutions and ideal gates):

    d rho_I / dt = -(pi alpha)^2 [A_I(t), [B(t), rho_I]],
    B(t) = int_0^t C(t - t') A_I(t') dt',

with A_I(t) = U0(t)^dag A U0(t) and C the segment correlation of the noise
traces actually fed to the Monte-Carlo engine. Within a segment the noise is
constant, so C(t - t') only depends on the segment lag.

For circulant (FFT-synthesised) traces the zero-frequency component is a
Gaussian constant offset independent of the rest of the trace. Its effect is
a random static shift of H_s, which second-order theory handles poorly once
its phase spread reaches order one; it is therefore averaged exactly by
Gauss-Hermite quadrature and only the remainder is treated perturbatively.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.linalg import expm

from .plan import GatePlan, IdealGate

QUADRATURE_ORDERS = (1, 8, 16, 24, 32, 48, 64, 96, 128, 192)


def superop(u: np.ndarray) -> np.ndarray:
    """Row-major superoperator of rho -> U rho U^dag."""
    return np.kron(u, u.conj())


def _commutator_superop(x: np.ndarray) -> np.ndarray:
    d = x.shape[-1]
    eye = np.eye(d)
    return np.kron(x, eye) - np.kron(eye, np.swapaxes(x, -1, -2))


def _interaction_couplings(h: np.ndarray, a: np.ndarray, plan: GatePlan, substeps: int):
    """A_I at substep midpoints, plus the final noiseless propagator."""
    e, v = np.linalg.eigh(h)
    dt = plan.tau / substeps
    u_step = (v * np.exp(-1j * e * dt)) @ v.conj().T
    u_half = (v * np.exp(-0.5j * e * dt)) @ v.conj().T
    u0 = np.eye(h.shape[0], dtype=complex)
    a_int = []
    for st in plan.steps:
        if isinstance(st, IdealGate):
            u0 = st.unitary @ u0
            continue
        if abs(st.tau - plan.tau) > 1e-15:
            raise ValueError("all evolution blocks must share the plan's segment length")
        for _ in range(st.n_segments * substeps):
            um = u_half @ u0
            a_int.append(um.conj().T @ a @ um)
            u0 = u_step @ u0
    return np.array(a_int).reshape(-1, substeps, *a.shape), u0


def tcl2_channel(h: np.ndarray, a: np.ndarray, plan: GatePlan, correlation: np.ndarray, alpha: float,
                 substeps: int = 8) -> np.ndarray:
    """16x16 superoperator of the schedule under second-order noise averaging.

    Parameters
    ----------
    h : ndarray
        System Hamiltonian (rad/s) used for the free evolutions.
    a : ndarray
        Coupling operator in the computational basis.
    plan : GatePlan
    correlation : ndarray
        ``correlation[m]`` = E[s_j s_{j+m}] for segment lag m.
    alpha : float
        Coupling strength in Hz.
    substeps : int
        Midpoint-rule substeps per segment.
    """
    a_int, u_final = _interaction_couplings(h, a, plan, substeps)
    n_seg = a_int.shape[0]
    d2 = h.shape[0] ** 2
    if n_seg == 0 or alpha == 0:
        return superop(u_final)
    if len(correlation) < n_seg:
        raise ValueError("correlation is shorter than the schedule")
    dt = plan.tau / substeps
    seg_int = a_int.sum(axis=1) * dt

    lags = np.arange(n_seg)[:, None] - np.arange(n_seg)[None, :]
    past = np.where(lags > 0, np.asarray(correlation)[np.clip(lags, 0, None)], 0.0)
    b_past = np.einsum("ji,iab->jab", past, seg_int)
    # within the current segment: all earlier substeps plus half of this one
    within = (np.cumsum(a_int, axis=1) - 0.5 * a_int) * dt
    b = b_past[:, None] + correlation[0] * within

    c2 = (np.pi * alpha) ** 2
    gens = -c2 * dt * (_commutator_superop(a_int.reshape(-1, *a.shape)) @
                       _commutator_superop(b.reshape(-1, *a.shape)))
    steps = expm(gens)
    total = np.eye(d2, dtype=complex)
    for s in steps:
        total = s @ total
    return superop(u_final) @ total


def quadrature_order(phase_spread: float, tol: float = 1e-7) -> int:
    """Smallest tabulated Gauss-Hermite order resolving exp(i x phase_spread)."""
    for n in QUADRATURE_ORDERS:
        x, w = hermegauss(n)
        w = w / w.sum()
        if abs(np.sum(w * np.exp(1j * phase_spread * x)) - np.exp(-0.5 * phase_spread**2)) < tol:
            return n
    return QUADRATURE_ORDERS[-1]


def memory_channel(h: np.ndarray, a: np.ndarray, plan: GatePlan, correlation: np.ndarray, alpha: float,
                   static_var: float = 0.0, substeps: int = 8, nodes=None) -> np.ndarray:
    """Channel with the static noise component averaged by quadrature.

    ``correlation`` is the full segment correlation; ``static_var`` the part
    of it carried by the trace-constant mode. When the resulting phase spread
    is negligible the split is skipped.
    """
    correlation = np.asarray(correlation, dtype=float)
    if alpha == 0 or static_var <= 0:
        return tcl2_channel(h, a, plan, correlation, alpha, substeps)
    ev = np.linalg.eigvalsh(a)
    spread = np.pi * alpha * np.sqrt(static_var) * plan.total_duration * (ev[-1] - ev[0])
    if nodes is None:
        if spread < 1e-3:
            return tcl2_channel(h, a, plan, correlation, alpha, substeps)
        nodes = quadrature_order(spread)
    x, w = hermegauss(nodes)
    w = w / w.sum()
    rest = correlation - static_var
    shift = np.pi * alpha * np.sqrt(static_var)
    out = np.zeros((h.shape[0] ** 2,) * 2, dtype=complex)
    for xi, wi in zip(x, w):
        out += wi * tcl2_channel(h + shift * xi * a, a, plan, rest, alpha, substeps)
    return out

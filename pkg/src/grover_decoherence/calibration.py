"""Calibration of free evolutions that realise a CNOT up to a z rotation.

Free evolution U(t) = exp(-i H_s t) is compared with the CNOT-equivalent
gate C_e(phi) = C R_z1(phi), R_z1(phi) = exp(i phi Z1 / 2), through

    F(phi, t) = |Tr(U(t) C_e(phi)^dagger)| / 4.

Because H_s is block diagonal in the control qubit, the trace collapses to a
closed form in the four analytic eigenvalues (``closed_form_fidelity``);
``trace_fidelity`` evaluates the definition directly and serves as an
independent check.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .system import SystemModel, analytic_eigenvalues

CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)

DEFAULT_T_STEP = 10e-6
DEFAULT_PHI_STEPS = 400  # pi / 200 spacing over a full turn


class CalibrationError(RuntimeError):
    """No CNOT-equivalent evolution reaches the requested fidelity."""


def rz1(phi) -> np.ndarray:
    """exp(i phi Z1 / 2); broadcasts over an array of angles."""
    phi = np.asarray(phi, dtype=float)
    d = np.stack(np.broadcast_arrays(np.exp(0.5j * phi), np.exp(0.5j * phi),
                                     np.exp(-0.5j * phi), np.exp(-0.5j * phi)), axis=-1)
    return d[..., :, None] * np.eye(4)


def cnot_equivalent(phi) -> np.ndarray:
    return CNOT @ rz1(phi)


def wrap_phase(phi):
    """Map angles into (-pi, pi]."""
    out = -((-np.asarray(phi) + np.pi) % (2 * np.pi) - np.pi)
    return float(out) if np.ndim(out) == 0 else out


def _kappa(model: SystemModel) -> float:
    p = model.params
    norm = np.hypot(p.omega_x2, p.omega_z2 - p.pi_j)
    # no transverse field and a resonant target: nothing to mix, kappa -> 0
    return p.omega_x2 / norm if norm > 0 else 0.0


def _pq(model: SystemModel, t, order: int = 0):
    """The two block amplitudes P(t), Q(t) or their ``order``-th t derivative."""
    lam = analytic_eigenvalues(model.params)
    t = np.asarray(t, dtype=float)[..., None]
    ph = np.exp(-1j * lam * t) * (-1j * lam) ** order
    p = ph[..., 0] + ph[..., 1]
    q = -_kappa(model) * (ph[..., 2] - ph[..., 3])
    return p, q


def closed_form_fidelity(model: SystemModel, phi, t):
    """|P(t) + e^{i phi} Q(t)| / 4 from the analytic spectrum; broadcasts."""
    p, q = _pq(model, t)
    return np.abs(p + np.exp(1j * np.asarray(phi)) * q) / 4.0


def trace_fidelity(model: SystemModel, phi, t):
    """|Tr(U(t) C_e(phi)^dagger)| / 4 evaluated directly; broadcasts."""
    t = np.asarray(t, dtype=float)
    phi = np.asarray(phi, dtype=float)
    # one eigendecomposition, per-time phases
    e, v = np.linalg.eigh(model.h_s)
    u = (v * np.exp(-1j * e * t[..., None])[..., None, :]) @ v.conj().T
    ce_dag = np.swapaxes(cnot_equivalent(phi).conj(), -1, -2)
    tr = np.einsum("...ij,...ji->...", u, ce_dag)
    return np.abs(tr) / 4.0


def cnot_fidelity(model: SystemModel, phi, t, form: str = "closed"):
    if form == "closed":
        return closed_form_fidelity(model, phi, t)
    if form == "trace":
        return trace_fidelity(model, phi, t)
    raise ValueError(f"unknown fidelity form {form!r}")


def best_phase(model: SystemModel, t) -> Tuple[np.ndarray, np.ndarray]:
    """Optimal phi and max_phi F for each t (exact, no grid)."""
    p, q = _pq(model, t)
    phi = wrap_phase(np.angle(p) - np.angle(q))
    return phi, (np.abs(p) + np.abs(q)) / 4.0


def _envelope_derivatives(model: SystemModel, t: float):
    """First and second t-derivatives of max_phi F = (|P| + |Q|) / 4."""
    vals = [_pq(model, t, k) for k in range(3)]
    d1 = d2 = 0.0
    for idx in range(2):
        f0, f1, f2 = (complex(v[idx]) for v in vals)
        a = abs(f0)
        if a == 0.0:
            continue
        re1 = (f0.conjugate() * f1).real
        d1 += re1 / a
        d2 += (abs(f1) ** 2 + (f0.conjugate() * f2).real) / a - re1**2 / a**3
    return d1 / 4.0, d2 / 4.0


def fidelity_gradient(model: SystemModel, phi: float, t: float) -> np.ndarray:
    """Analytic gradient (dF/dphi, dF/dt) of the closed form, t in seconds."""
    p, q = (complex(x) for x in _pq(model, t))
    dp, dq = (complex(x) for x in _pq(model, t, 1))
    e = np.exp(1j * phi)
    z = p + e * q
    a = abs(z)
    dphi = (z.conjugate() * (1j * e * q)).real / a / 4.0
    dt = (z.conjugate() * (dp + e * dq)).real / a / 4.0
    return np.array([dphi, dt])


@dataclass(frozen=True)
class CnotCalibration:
    t_c: float
    phi_c: float
    fidelity: float
    system: str = "Custom"

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0 + 1e-12:
            raise ValueError("fidelity must lie in [0, 1]")

    def record(self) -> dict:
        return {"system": self.system, "t_C": self.t_c, "phi_C": self.phi_c, "fidelity": self.fidelity}


def refine_maximum(model: SystemModel, t0: float, bracket: float, max_iter: int = 60) -> float:
    """Newton iteration on d/dt max_phi F, kept inside ``t0 +- bracket``."""
    t = t0
    for _ in range(max_iter):
        d1, d2 = _envelope_derivatives(model, t)
        if d2 >= 0:
            break
        step = -d1 / d2
        t_new = min(max(t + step, t0 - bracket), t0 + bracket)
        if abs(t_new - t) <= 1e-17:
            t = t_new
            break
        t = t_new
    if _envelope_derivatives(model, t)[1] >= 0:
        # not at a concave point; fall back to bounded scalar search
        res = minimize_scalar(lambda x: -best_phase(model, x)[1], bounds=(t0 - bracket, t0 + bracket),
                              method="bounded", options={"xatol": 1e-12})
        t = float(res.x)
    return t


def fidelity_scan(model: SystemModel, t_grid, n_phi: int = DEFAULT_PHI_STEPS, form: str = "closed"):
    """F on a (t, phi) grid with phi spanning [-pi, pi) in ``n_phi`` steps."""
    phi_grid = -np.pi + 2 * np.pi * np.arange(n_phi) / n_phi
    f = cnot_fidelity(model, phi_grid[None, :], np.asarray(t_grid)[:, None], form)
    return phi_grid, f


def calibrate_cnot(model: SystemModel, t_range=(0.0, 15e-3), f_min: float = 0.999,
                   t_step: float = DEFAULT_T_STEP, n_phi: int = DEFAULT_PHI_STEPS) -> List[CnotCalibration]:
    """All local maxima of max_phi F(phi, t) with F >= f_min inside ``t_range``.

    A coarse (t, phi) grid locates candidate peaks; each is then polished to
    machine precision. The phase polish is exact (phi* = arg P - arg Q) and
    the time polish is a Newton iteration on the analytic derivative of the
    phase-optimised fidelity.
    """
    t_lo, t_hi = map(float, t_range)
    if not (0.0 <= t_lo < t_hi <= 50e-3):
        raise ValueError("t_range must lie within (0, 50 ms]")
    n_t = int(np.ceil((t_hi - t_lo) / t_step)) + 1
    t_grid = np.linspace(t_lo, t_hi, n_t)
    step = t_grid[1] - t_grid[0]
    _, f = fidelity_scan(model, t_grid, n_phi)
    g = f.max(axis=1)

    found = []
    for i in range(1, n_t - 1):
        if not (g[i] >= g[i - 1] and g[i] > g[i + 1]):
            continue
        t = refine_maximum(model, t_grid[i], 2 * step)
        phi, fid = best_phase(model, t)
        if fid >= f_min and t_lo <= t <= t_hi:
            if not any(abs(t - c.t_c) < step for c in found):
                found.append(CnotCalibration(float(t), float(phi), float(fid), model.label))
    if not found:
        raise CalibrationError(
            f"no CNOT-equivalent evolution with F >= {f_min} in [{t_lo * 1e3:.3f}, {t_hi * 1e3:.3f}] ms "
            f"(best grid value {g.max():.6f})")
    return found


def nearest_calibration(cals: Sequence[CnotCalibration], t_target: float) -> CnotCalibration:
    return min(cals, key=lambda c: abs(c.t_c - t_target))


def calibrations_json(cals: Sequence[CnotCalibration], meta: dict | None = None) -> str:
    doc = {"calibrations": [c.record() for c in cals]}
    if meta:
        doc = {"meta": meta, **doc}
    return json.dumps(doc, indent=2, sort_keys=False)

"""Two-qubit system Hamiltonians, eigenstructure and coupling operators.

Qubit 1 is the left tensor factor and acts as the CNOT control; qubit 2 is
driven by a transverse field. With hbar = 1 the Hamiltonian is

    H = 1/2 [wz1 Z1 + wz2 Z2 - wx2 X2 + pi J Z1 Z2]

in rad/s. Energies are indexed 1..4 in ascending order throughout the public
API (0-based internally).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .quantum import IDENTITY2, SIGMA_X, SIGMA_Z, hermitian_eigensystem, kron

DEFAULT_J_HZ = 215.0

# (wz1, wz2, wx2) in units of pi*J
PRESET_PI_J_UNITS = {
    "system-I": (0.378, 1.0, 2.272),
    "system-II": (0.378, 1.0, 1.136),
}
PRESET_LABELS = {"system-I": "SystemI", "system-II": "SystemII"}

Z1 = kron(SIGMA_Z, IDENTITY2)
Z2 = kron(IDENTITY2, SIGMA_Z)
X2 = kron(IDENTITY2, SIGMA_X)
Z1Z2 = kron(SIGMA_Z, SIGMA_Z)

COUPLING_KINDS = ("Z1", "Z2", "Z1plusZ2")


@dataclass(frozen=True)
class SystemParams:
    """Hamiltonian parameters in rad/s (``J`` in Hz)."""

    omega_z1: float
    omega_z2: float
    omega_x2: float
    J: float = DEFAULT_J_HZ
    label: str = "Custom"

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        for name in ("omega_z1", "omega_z2", "omega_x2"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.label not in ("SystemI", "SystemII", "Custom"):
            raise ValueError(f"unknown system label {self.label!r}")

    @property
    def pi_j(self) -> float:
        return np.pi * self.J

    @classmethod
    def from_pi_j_units(cls, wz1, wz2, wx2, J=DEFAULT_J_HZ, label="Custom"):
        s = np.pi * J
        return cls(wz1 * s, wz2 * s, wx2 * s, J, label)

    def in_pi_j_units(self):
        s = self.pi_j
        return self.omega_z1 / s, self.omega_z2 / s, self.omega_x2 / s


def preset(name: str, J: float = DEFAULT_J_HZ) -> SystemParams:
    """Parameters of a named preset (``"system-I"`` or ``"system-II"``)."""
    try:
        units = PRESET_PI_J_UNITS[name]
    except KeyError:
        raise KeyError(f"unknown system preset {name!r}; choose from {sorted(PRESET_PI_J_UNITS)}") from None
    return SystemParams.from_pi_j_units(*units, J=J, label=PRESET_LABELS[name])


def build_hamiltonian(p: SystemParams) -> np.ndarray:
    return 0.5 * (p.omega_z1 * Z1 + p.omega_z2 * Z2 - p.omega_x2 * X2 + p.pi_j * Z1Z2)


def diagonal_hamiltonian(p: SystemParams) -> np.ndarray:
    """The sigma_z-only part of the Hamiltonian (free precession)."""
    return 0.5 * (p.omega_z1 * Z1 + p.omega_z2 * Z2 + p.pi_j * Z1Z2)


def rf_hamiltonian(p: SystemParams) -> np.ndarray:
    """The transverse drive on qubit 2 in the rotating frame."""
    return -0.5 * p.omega_x2 * X2


def analytic_eigenvalues(p: SystemParams) -> np.ndarray:
    """Closed-form eigenvalues (rad/s), in the order lambda_1..lambda_4.

    The Hamiltonian is block diagonal in the control qubit. Written with
    ordinary frequencies nu = omega / 2pi,

        lambda_{1,2} = pi [ nu_z1 +- sqrt(nu_x^2 + (nu_z2 + J/2)^2)]
        lambda_{3,4} = pi [-nu_z1 +- sqrt(nu_x^2 + (nu_z2 - J/2)^2)]

    which is what this function evaluates.
    """
    nu_z1, nu_z2, nu_x = (w / (2 * np.pi) for w in (p.omega_z1, p.omega_z2, p.omega_x2))
    half_j = p.J / 2.0
    r_plus = np.hypot(nu_x, nu_z2 + half_j)
    r_minus = np.hypot(nu_x, nu_z2 - half_j)
    return np.pi * np.array([nu_z1 + r_plus, nu_z1 - r_plus, -nu_z1 + r_minus, -nu_z1 - r_minus])


@dataclass(frozen=True, eq=False)
class SystemModel:
    """A Hamiltonian with its cached eigensystem.

    Attributes
    ----------
    params : SystemParams
    h_s : ndarray
        4x4 Hamiltonian (rad/s).
    energies : ndarray
        Ascending eigenvalues E_1..E_4 (rad/s).
    eigvecs : ndarray
        Columns are the gauge-fixed eigenvectors V.
    omega : ndarray
        ``omega[n, m] = E_n - E_m`` (0-based indices).
    """

    params: SystemParams
    h_s: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)

    @classmethod
    def from_params(cls, p: SystemParams) -> "SystemModel":
        h = build_hamiltonian(p)
        e, v = hermitian_eigensystem(h)
        w = e[:, None] - e[None, :]
        for arr in (h, e, v, w):
            arr.setflags(write=False)
        return cls(p, h, e, v, w)

    @classmethod
    def preset(cls, name: str, J: float = DEFAULT_J_HZ) -> "SystemModel":
        return cls.from_params(preset(name, J))

    @property
    def label(self) -> str:
        return self.params.label

    @property
    def max_transition(self) -> float:
        return float(np.max(np.abs(self.omega)))

    def to_energy_basis(self, op: np.ndarray) -> np.ndarray:
        return self.eigvecs.conj().T @ op @ self.eigvecs

    def from_energy_basis(self, op: np.ndarray) -> np.ndarray:
        return self.eigvecs @ op @ self.eigvecs.conj().T


def transition_frequency(m: SystemModel, n: int, k: int) -> float:
    """omega_nk = E_n - E_k for 1-based indices n, k."""
    dim = len(m.energies)
    for idx in (n, k):
        if not (1 <= idx <= dim):
            raise IndexError(f"level index {idx} outside 1..{dim}")
    return float(m.omega[n - 1, k - 1])


def transitions(m: SystemModel):
    """All positive transition frequencies as ``(n, k, omega_nk)`` with n > k."""
    out = []
    for n in range(2, 5):
        for k in range(1, n):
            out.append((n, k, transition_frequency(m, n, k)))
    return out


def coupling_operator(kind: str) -> np.ndarray:
    """Computational-basis coupling operator A for ``Z1``, ``Z2`` or ``Z1plusZ2``."""
    if kind == "Z1":
        return Z1.copy()
    if kind == "Z2":
        return Z2.copy()
    if kind == "Z1plusZ2":
        return Z1 + Z2
    raise ValueError(f"unknown coupling kind {kind!r}; choose from {COUPLING_KINDS}")


@dataclass(frozen=True, eq=False)
class CouplingOperator:
    kind: str
    computational_basis: np.ndarray = field(repr=False)
    energy_basis: np.ndarray = field(repr=False)


def coupling_in_energy_basis(m: SystemModel, kind: str) -> CouplingOperator:
    a = coupling_operator(kind)
    return CouplingOperator(kind, a, m.to_energy_basis(a))


def same_j(models, rtol: float = 1e-12) -> Optional[float]:
    js = [mm.params.J for mm in models]
    if any(abs(j - js[0]) > rtol * js[0] for j in js):
        return None
    return js[0]

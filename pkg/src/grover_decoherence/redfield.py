"""Markovian Bloch-Redfield master equation in the system eigenbasis.

For H = H_s + pi*alpha*s(t)*A with a classical, zero-mean, unit-variance
noise s of two-sided spectral density S(omega), the relaxation tensor is

    Lambda_lmnk = 1/2 * (pi alpha)^2 * S(omega_nk) * A_lm * A_nk

(the real part of the one-sided transform; frequency shifts are dropped) and
the rates are

    R_nmkl = delta_ml sum_r Lambda_nrrk + delta_nk sum_r Lambda*_mrrl
             - Lambda_lmnk - Lambda*_knml

so that d rho_nm / dt = -i omega_nm rho_nm - sum_kl R_nmkl rho_kl.
Density matrices are vectorised row-major: index 4*n + m.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import expm

from .noise import Reservoir, spectral_density
from .system import CouplingOperator, SystemModel, coupling_in_energy_basis

POSITIVITY_TOL = 1e-7


class PositivityError(ArithmeticError):
    """An integrated state has an eigenvalue below -1e-7."""


def relaxation_tensor(model: SystemModel, coupling: CouplingOperator, r: Reservoir, alpha: float,
                      spectrum: Optional[Callable] = None) -> np.ndarray:
    """Lambda_lmnk for a coupling given in the energy basis.

    ``spectrum`` overrides the unit-variance spectral density (a callable of
    omega in rad/s); it must integrate to 1 over omega / 2 pi.
    """
    a = coupling.energy_basis
    s_fn = spectrum if spectrum is not None else (lambda w: spectral_density(w, r))
    s = (np.pi * alpha) ** 2 * s_fn(model.omega)
    lam = 0.5 * np.einsum("lm,nk,nk->lmnk", a, a, s)
    return np.real_if_close(lam, tol=1000)


def redfield_rates(lam: np.ndarray) -> np.ndarray:
    """Rate tensor R[n, m, k, l] from Lambda[l, m, n, k]."""
    d = lam.shape[0]
    eye = np.eye(d)
    inner = np.einsum("nrrk->nk", lam)
    t1 = np.einsum("ml,nk->nmkl", eye, inner)
    t2 = np.einsum("nk,ml->nmkl", eye, inner.conj())
    t3 = np.einsum("lmnk->nmkl", lam)
    t4 = np.einsum("knml->nmkl", lam.conj())
    return t1 + t2 - t3 - t4


def generator_matrix(model: SystemModel, rates: np.ndarray) -> np.ndarray:
    d = len(model.energies)
    coherent = np.diag(-1j * model.omega.reshape(-1))
    return coherent - rates.reshape(d * d, d * d)


@dataclass(frozen=True, eq=False)
class RedfieldGenerator:
    """The 16x16 Liouvillian acting on row-major vec(rho) in the eigenbasis."""

    system: SystemModel
    coupling: CouplingOperator
    reservoir: Reservoir
    alpha: float
    Lambda: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, model: SystemModel, coupling: Union[str, CouplingOperator], r: Reservoir,
              alpha: float) -> "RedfieldGenerator":
        if isinstance(coupling, str):
            coupling = coupling_in_energy_basis(model, coupling)
        lam = relaxation_tensor(model, coupling, r, alpha)
        rates = redfield_rates(lam)
        return cls(model, coupling, r, float(alpha), lam, rates, generator_matrix(model, rates))

    def apply(self, rho_eig: np.ndarray) -> np.ndarray:
        """d rho / dt for an eigenbasis density matrix."""
        d = rho_eig.shape[0]
        return (self.L @ rho_eig.reshape(-1)).reshape(d, d)

    def eigenbasis_propagator(self, t: float) -> np.ndarray:
        if not np.all(np.isfinite(self.L)):
            raise FloatingPointError("Redfield generator has non-finite entries")
        with np.errstate(over="ignore", invalid="ignore"):
            out = expm(self.L * t)
        if not np.all(np.isfinite(out)):
            # growing modes appear once the non-secular generator leaves the weak-coupling regime
            raise FloatingPointError(f"Redfield propagator overflowed at t = {t:.3e} s")
        return out

    def propagator(self, t: float) -> np.ndarray:
        """Superoperator for duration t acting on computational-basis vec(rho)."""
        v = self.system.eigvecs
        into = np.kron(v.conj().T, v.T)   # rho -> V^dag rho V
        out = np.kron(v, v.conj())        # rho -> V rho V^dag
        return out @ self.eigenbasis_propagator(t) @ into


def check_state(rho: np.ndarray, tol: float = POSITIVITY_TOL) -> np.ndarray:
    if not np.all(np.isfinite(rho)):
        raise FloatingPointError("Redfield state has non-finite entries")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -tol:
        raise PositivityError(f"Redfield state has eigenvalue {lo:.3e} (weak-coupling regime exceeded)")
    return rho


def integrate(rho0: np.ndarray, gen: RedfieldGenerator, t: float, check: bool = True) -> np.ndarray:
    """Evolve a computational-basis density matrix for time t."""
    m = gen.system
    rho_e = m.to_energy_basis(np.asarray(rho0, dtype=complex))
    d = rho_e.shape[0]
    out = (gen.eigenbasis_propagator(t) @ rho_e.reshape(-1)).reshape(d, d)
    rho = m.from_energy_basis(out)
    return check_state(rho) if check else rho

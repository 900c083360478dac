"""Dense linear algebra and state primitives for small registers.

Everything here works on plain numpy arrays. Hamiltonians are in angular
frequency units (rad/s) with hbar = 1, so ``propagator(h, t)`` is
``exp(-i h t)``.
"""
from __future__ import annotations

import numpy as np

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)

HERMITIAN_TOL = 1e-10


def kron(*ops) -> np.ndarray:
    """Tensor product of any number of operators, left factor first."""
    if not ops:
        raise ValueError("kron needs at least one operator")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    _check_square(m)
    return bool(np.linalg.norm(m - m.conj().T) <= tol * max(1.0, np.linalg.norm(m)))


def is_unitary(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    _check_square(m)
    return bool(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])) <= tol)


def _gauge_fix(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Ties in magnitude (within 1e-12) resolve to the lowest index, which makes
    the choice stable against rounding noise.
    """
    out = vecs.copy()
    for j in range(out.shape[1]):
        mags = np.abs(out[:, j])
        i = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
        out[:, j] *= np.conj(out[i, j]) / mags[i]
    return out


def pivot_index(vec: np.ndarray) -> int:
    mags = np.abs(vec)
    return int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])


def hermitian_eigensystem(h, tol: float = HERMITIAN_TOL, degeneracy_tol: float = 1e-12):
    """Ascending eigenvalues and gauge-fixed eigenvectors of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        Hermitian matrix.
    tol : float
        Relative Hermiticity tolerance.
    degeneracy_tol : float
        Eigenvalues closer than ``degeneracy_tol * max|E|`` are treated as
        degenerate and ordered by the row index of their largest entry.

    Returns
    -------
    evals : ndarray
        Real eigenvalues, ascending.
    evecs : ndarray
        Unitary matrix whose columns are the eigenvectors, with the largest
        entry of each column real and positive.
    """
    h = np.asarray(h, dtype=complex)
    _check_square(h)
    if not is_hermitian(h, tol):
        raise ValueError("hermitian_eigensystem: input is not Hermitian")
    evals, evecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    evecs = _gauge_fix(evecs)

    # tie-break exactly degenerate groups by pivot row
    scale = max(1.0, float(np.max(np.abs(evals))))
    order = list(range(len(evals)))
    i = 0
    while i < len(evals):
        j = i + 1
        while j < len(evals) and evals[j] - evals[i] <= degeneracy_tol * scale:
            j += 1
        if j - i > 1:
            order[i:j] = sorted(order[i:j], key=lambda c: pivot_index(evecs[:, c]))
        i = j
    return evals[order], evecs[:, order]


def propagator(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` via the Hermitian eigendecomposition."""
    evals, evecs = hermitian_eigensystem(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def batched_propagators(h_stack: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for a stack of Hermitian matrices of shape (..., d, d).

    No gauge fixing is needed for the exponential, so this goes straight to
    ``numpy.linalg.eigh``.
    """
    evals, evecs = np.linalg.eigh(h_stack)
    phases = np.exp(-1j * evals * t)
    return (evecs * phases[..., None, :]) @ np.swapaxes(evecs.conj(), -1, -2)


def ket(amplitudes, tol: float = 1e-12) -> np.ndarray:
    """Validate and return a normalized state vector."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm^2 = {norm:.15g})")
    return psi


def basis_ket(bits: str) -> np.ndarray:
    """Computational basis ket for a bit string such as ``"01"``."""
    dim = 2 ** len(bits)
    psi = np.zeros(dim, dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def validate_density_matrix(rho, tol: float = 1e-10, eig_tol: float = 1e-9) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return the array."""
    rho = np.asarray(rho, dtype=complex)
    _check_square(rho)
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace is {tr}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -eig_tol:
        raise ValueError(f"density matrix has eigenvalue {lo:.3e}")
    return rho


def purity(rho) -> float:
    """Tr(rho^2)."""
    rho = np.asarray(rho)
    val = np.einsum("ij,ji->", rho, rho)
    return float(val.real)


def overlap_fidelity(rho0, rho) -> float:
    """Real part of Tr(rho0 rho); the imaginary part must vanish."""
    rho0, rho = np.asarray(rho0), np.asarray(rho)
    if rho0.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {rho0.shape} vs {rho.shape}")
    val = np.einsum("ij,ji->", rho0, rho)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"overlap has imaginary part {val.imag:.3e}")
    return float(val.real)


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` for Hermitian arguments."""
    d = np.asarray(a) - np.asarray(b)
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(d)).sum())


def conjugate(u, rho) -> np.ndarray:
    """U rho U^dagger."""
    u = np.asarray(u)
    return u @ rho @ u.conj().T

"""Piecewise-constant evolution under H(t) = H_s + pi * alpha * s(t) * A.

Within a segment of duration tau the noise value s is constant, so each
segment is a single matrix exponential. ``"exact"`` exponentiates the full
segment Hamiltonian; ``"split-step"`` mimics a free precession followed by a
short transverse pulse, exp(-i tau (H_diag + pi alpha s A)) exp(-i tau H_rf).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .noise import NoiseTrace
from .quantum import batched_propagators, conjugate, propagator
from .system import CouplingOperator, SystemModel, diagonal_hamiltonian, rf_hamiltonian

METHODS = ("exact", "split-step")


class TraceExhaustedError(ValueError):
    pass


class SplitStepWarning(UserWarning):
    pass


def normalize_method(name: str) -> str:
    key = name.replace("_", "-").lower()
    key = {"splitstep": "split-step"}.get(key, key)
    if key not in METHODS:
        raise ValueError(f"unknown evolution method {name!r}; choose from {METHODS}")
    return key


@dataclass(frozen=True)
class EvolutionConfig:
    """How one noisy segment is propagated.

    Attributes
    ----------
    method : {"exact", "split-step"}
    tau : float
        Segment duration (s).
    alpha : float
        Perturbation strength in Hz; the Hamiltonian term is pi*alpha*s*A.
    coupling : CouplingOperator
    """

    method: str
    tau: float
    alpha: float
    coupling: CouplingOperator

    def __post_init__(self):
        object.__setattr__(self, "method", normalize_method(self.method))
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and non-negative")

    def split_step_limit(self, m: SystemModel) -> float:
        return 0.1 * 2 * np.pi / m.max_transition

    def check(self, m: SystemModel) -> None:
        if self.method == "split-step" and self.tau > self.split_step_limit(m):
            warnings.warn(
                f"split-step segment {self.tau * 1e6:.2f} us exceeds 10% of the fastest "
                f"period ({self.split_step_limit(m) * 1e6:.2f} us)", SplitStepWarning, stacklevel=3)


def segment_propagators(m: SystemModel, cfg: EvolutionConfig, s_values) -> np.ndarray:
    """Propagators for an array of noise values; shape ``s.shape + (4, 4)``."""
    s = np.asarray(s_values, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("noise values must be finite")
    a = cfg.coupling.computational_basis
    amp = np.pi * cfg.alpha * s[..., None, None]
    if cfg.method == "exact":
        return batched_propagators(m.h_s + amp * a, cfg.tau)
    hd = diagonal_hamiltonian(m.params)
    u_rf = propagator(rf_hamiltonian(m.params), cfg.tau)
    return batched_propagators(hd + amp * a, cfg.tau) @ u_rf


def segment_propagator(m: SystemModel, cfg: EvolutionConfig, s_value: float) -> np.ndarray:
    if not np.isfinite(s_value):
        raise ValueError("noise value must be finite")
    return segment_propagators(m, cfg, np.array(float(s_value)))


def chain(props: np.ndarray) -> np.ndarray:
    """Time-ordered product of propagators along axis -3 (first applied first)."""
    out = props[..., 0, :, :]
    for j in range(1, props.shape[-3]):
        out = props[..., j, :, :] @ out
    return out


def block_unitaries(m: SystemModel, cfg: EvolutionConfig, s_block: np.ndarray) -> np.ndarray:
    """Total propagator of consecutive segments for a batch of traces.

    ``s_block`` has shape (M, n); the result has shape (M, 4, 4).
    """
    s_block = np.atleast_2d(s_block)
    if s_block.shape[1] == 0:
        return np.broadcast_to(np.eye(4, dtype=complex), (s_block.shape[0], 4, 4)).copy()
    return chain(segment_propagators(m, cfg, s_block))


class TraceCursor:
    """Sequential reader over one noise trace shared by successive gates."""

    def __init__(self, trace: NoiseTrace):
        self.trace = trace
        self.position = 0

    @property
    def remaining(self) -> int:
        return self.trace.n_segments - self.position

    def take(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be non-negative")
        if n > self.remaining:
            raise TraceExhaustedError(
                f"trace exhausted: requested {n} segments, {self.remaining} remain")
        vals = self.trace.values[self.position:self.position + n]
        self.position += n
        return vals


def evolve_under_trace(rho_in, m: SystemModel, cfg: EvolutionConfig, trace, n_steps: int):
    """Evolve through ``n_steps`` segments of a trace.

    ``trace`` may be a ``NoiseTrace`` (read from its start) or a
    ``TraceCursor`` (read from its current position and advanced).
    """
    cursor = trace if isinstance(trace, TraceCursor) else TraceCursor(trace)
    if abs(cursor.trace.tau - cfg.tau) > 1e-15 * max(1.0, cfg.tau):
        raise ValueError("trace tau does not match the evolution config")
    cfg.check(m)
    vals = cursor.take(n_steps)
    if n_steps == 0:
        return np.array(rho_in, dtype=complex)
    u = block_unitaries(m, cfg, vals[None, :])[0]
    return conjugate(u, rho_in)


def ensemble_average(rhos: Sequence[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of density matrices."""
    if len(rhos) == 0:
        raise ValueError("cannot average an empty list of states")
    arr = np.asarray(rhos, dtype=complex)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError("states must be square matrices of equal size")
    return arr.mean(axis=0)

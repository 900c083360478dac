"""Classical colored-noise traces with a Lorentzian power spectrum.

A trace is a real, piecewise-constant sequence s_j (one value per segment of
duration tau) whose ensemble power spectrum follows the symmetric Lorentzian

    L(omega) = Gamma^2 / (Gamma^2 + (|omega| - omega0)^2)

with unit peak. The physical amplitude of the perturbation is carried by the
coupling strength alpha elsewhere, so traces here have unit variance.

Two synthesis backends are provided:

``"fft"`` (default)
    White Gaussian noise filtered in the frequency domain by sqrt(L) on the
    DFT grid of the trace. The ensemble periodogram then has expectation
    exactly proportional to L sampled on that grid, and the segment
    correlation matrix is circulant.
``"ar1"``
    A complex first-order autoregressive envelope (the exact discretisation
    of an exponentially correlated process) modulated by the carrier
    exp(i omega0 t). Its correlation is exactly exp(-Gamma|t|) cos(omega0 t)
    on the segment grid, but an 80-sample periodogram of it is strongly
    smeared by leakage.

Normalisation is either ``"ensemble"`` (unit variance in expectation, which
keeps the traces Gaussian) or ``"trace"`` (each trace rescaled to unit RMS).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import lfilter

from .system import SystemModel, same_j, transition_frequency

DEFAULT_GAMMA = 100.0
DEFAULT_TAU = 304.38e-6
DEFAULT_SEGMENTS = 80

BACKENDS = ("fft", "ar1")
NORMALIZATIONS = ("ensemble", "trace")


@dataclass(frozen=True)
class Reservoir:
    """Lorentzian noise spectrum: half-width ``gamma`` and center ``omega0`` (rad/s)."""

    gamma: float
    omega0: float
    label: str = "Custom"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.omega0 >= 0:
            raise ValueError(f"omega0 must be non-negative, got {self.omega0}")

    @property
    def kappa(self) -> float:
        # spectral strength chosen so that the peak value is 1
        return self.gamma


def lorentzian_psd(omega, r: Reservoir):
    """Unit-peak Lorentzian evaluated at ``|omega|``."""
    dw = np.abs(omega) - r.omega0
    return r.kappa * r.gamma / (r.gamma**2 + dw**2)


def lorentzian_norm(r: Reservoir) -> float:
    """Integral of ``lorentzian_psd`` over all omega, divided by 2 pi."""
    return r.gamma / np.pi * (0.5 * np.pi + np.arctan(r.omega0 / r.gamma))


def spectral_density(omega, r: Reservoir):
    """Two-sided power spectral density of a unit-variance trace.

    Same shape as ``lorentzian_psd`` but normalised so that its integral
    over omega / 2 pi equals 1 (the variance).
    """
    return lorentzian_psd(omega, r) / lorentzian_norm(r)


def reservoir_presets(model_i: SystemModel, model_ii: SystemModel, gamma: float = DEFAULT_GAMMA):
    """The four reference reservoirs R1..R4.

    R1 sits on omega^I_42, R2 on omega^II_32, R3 midway between omega^I_31
    and omega^II_41 and R4 at zero frequency.
    """
    if same_j((model_i, model_ii)) is None:
        raise ValueError("reservoir presets need both systems built with the same J")
    w31 = transition_frequency(model_i, 3, 1)
    w41 = transition_frequency(model_ii, 4, 1)
    return {
        "R1": Reservoir(gamma, transition_frequency(model_i, 4, 2), "R1"),
        "R2": Reservoir(gamma, transition_frequency(model_ii, 3, 2), "R2"),
        "R3": Reservoir(gamma, 0.5 * (w31 + w41), "R3"),
        "R4": Reservoir(gamma, 0.0, "R4"),
    }


@dataclass(frozen=True, eq=False)
class NoiseTrace:
    tau: float
    values: np.ndarray = field(repr=False)
    seed: int
    gamma: float = float("nan")
    omega0: float = float("nan")

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("a trace needs at least one segment")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def n_segments(self) -> int:
        return len(self.values)

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    frequencies: np.ndarray
    power: np.ndarray
    n_traces: int


def derive_seed(master_seed: int, k: int) -> int:
    """Seed of trace ``k`` in an ensemble; stable when the ensemble grows."""
    return int(np.random.SeedSequence([int(master_seed), int(k)]).generate_state(1, np.uint64)[0])


def dft_frequencies(n_segments: int, tau: float) -> np.ndarray:
    """Angular frequencies of the length-n DFT, in numpy's native order."""
    return 2.0 * np.pi * np.fft.fftfreq(n_segments, tau)


def _grid_shape(r: Reservoir, n_segments: int, tau: float) -> np.ndarray:
    s = lorentzian_psd(dft_frequencies(n_segments, tau), r)
    return s / s.mean()


def _ar1_envelope(rng, r: Reservoir, n_segments: int, tau: float) -> np.ndarray:
    a = np.exp(-r.gamma * tau)
    burn = int(np.ceil(10.0 / (r.gamma * tau)))
    n = burn + n_segments
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    drive = np.sqrt(1.0 - a * a) * g
    drive[0] = g[0]  # start from the stationary distribution
    z = lfilter([1.0], [1.0, -a], drive)
    return z[burn:]


def ar1_envelope(r: Reservoir, n_segments: int, tau: float, seed: int) -> np.ndarray:
    """Complex pre-modulation envelope of the ``"ar1"`` backend for ``seed``."""
    return _ar1_envelope(np.random.default_rng(seed), r, n_segments, tau)


def _raw_trace(r: Reservoir, n_segments: int, tau: float, seed: int, backend: str) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if backend == "fft":
        x = rng.standard_normal(n_segments)
        return np.fft.ifft(np.fft.fft(x) * np.sqrt(_grid_shape(r, n_segments, tau))).real
    if backend == "ar1":
        z = _ar1_envelope(rng, r, n_segments, tau)
        carrier = np.exp(1j * r.omega0 * tau * np.arange(n_segments))
        # Re(z e^{i w0 t}) has variance 1/2 for unit |z|^2
        return np.sqrt(2.0) * (z * carrier).real
    raise ValueError(f"unknown noise backend {backend!r}; choose from {BACKENDS}")


def generate_trace(r: Reservoir, n_segments: int, tau: float, seed: int,
                   backend: str = "fft", normalization: str = "ensemble") -> NoiseTrace:
    """One seeded noise trace.

    Parameters
    ----------
    r : Reservoir
    n_segments : int
        Number of piecewise-constant segments.
    tau : float
        Segment duration in seconds.
    seed : int
        Seed for ``numpy.random.default_rng``; equal seeds give equal traces.
    backend : {"fft", "ar1"}
    normalization : {"ensemble", "trace"}
        ``"ensemble"`` gives unit variance in expectation; ``"trace"``
        rescales this trace to unit RMS.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}; choose from {NORMALIZATIONS}")
    s = _raw_trace(r, n_segments, tau, seed, backend)
    if normalization == "trace":
        rms = np.sqrt(np.mean(s**2))
        s = s / rms if rms > 0 else s
    return NoiseTrace(tau, s, int(seed), r.gamma, r.omega0)


def generate_ensemble(r: Reservoir, n_traces: int, n_segments: int, tau: float, master_seed: int,
                      backend: str = "fft", normalization: str = "ensemble", start: int = 0):
    """Traces ``start .. start+n_traces-1`` of the ensemble seeded by ``master_seed``."""
    return [generate_trace(r, n_segments, tau, derive_seed(master_seed, k), backend, normalization)
            for k in range(start, start + n_traces)]


def stack_values(traces: Sequence[NoiseTrace]) -> np.ndarray:
    if len(traces) == 0:
        raise ValueError("empty trace list")
    n, tau = traces[0].n_segments, traces[0].tau
    for t in traces:
        if t.n_segments != n or t.tau != tau:
            raise ValueError("traces do not share tau and n_segments")
    return np.stack([t.values for t in traces])


def estimate_psd(traces: Sequence[NoiseTrace]) -> SpectrumEstimate:
    """Ensemble-averaged periodogram on the symmetric DFT grid.

    Power is |DFT|^2 / n, so white unit-variance noise has flat unit power
    and the mean power over the grid equals the mean squared sample value.
    Frequencies are returned ascending (rad/s).
    """
    vals = stack_values(traces)
    n = vals.shape[1]
    power = (np.abs(np.fft.fft(vals, axis=1)) ** 2).mean(axis=0) / n
    freqs = dft_frequencies(n, traces[0].tau)
    return SpectrumEstimate(np.fft.fftshift(freqs), np.fft.fftshift(power), len(traces))


def correlation_function(t, r: Reservoir):
    """exp(-Gamma |t|) cos(omega0 t), the correlation of the ``"ar1"`` process."""
    t = np.asarray(t, dtype=float)
    return np.exp(-r.gamma * np.abs(t)) * np.cos(r.omega0 * t)


def segment_correlation(r: Reservoir, n_segments: int, tau: float, backend: str = "fft") -> np.ndarray:
    """E[s_j s_{j+m}] for lags m = 0..n-1 under ensemble normalisation.

    For ``"fft"`` the covariance is circulant, ``c[m] == c[n - m]``; for
    ``"ar1"`` it is Toeplitz with the exact continuous correlation.
    """
    if backend == "fft":
        return np.fft.ifft(_grid_shape(r, n_segments, tau)).real
    if backend == "ar1":
        return correlation_function(tau * np.arange(n_segments), r)
    raise ValueError(f"unknown noise backend {backend!r}; choose from {BACKENDS}")


def static_variance(r: Reservoir, n_segments: int, tau: float, backend: str = "fft") -> float:
    """Variance of the zero-frequency (trace-constant) component.

    For the ``"fft"`` backend this mode is statistically independent of the
    rest of the trace, so it can be averaged exactly instead of perturbatively.
    """
    if backend == "fft":
        return float(_grid_shape(r, n_segments, tau)[0] / n_segments)
    return 0.0


def expected_periodogram(r: Reservoir, n_segments: int, tau: float, backend: str = "fft") -> SpectrumEstimate:
    """Exact expectation of ``estimate_psd`` for the given backend."""
    freqs = dft_frequencies(n_segments, tau)
    if backend == "fft":
        power = _grid_shape(r, n_segments, tau)
    else:
        m = np.arange(-(n_segments - 1), n_segments)
        c = correlation_function(m * tau, r) * (1.0 - np.abs(m) / n_segments)
        power = (c[None, :] * np.exp(-1j * freqs[:, None] * m[None, :] * tau)).sum(axis=1).real
    return SpectrumEstimate(np.fft.fftshift(freqs), np.fft.fftshift(power), 0)


def target_psd(frequencies, r: Reservoir) -> np.ndarray:
    """The Lorentzian on a grid, scaled to unit mean (the periodogram target)."""
    s = lorentzian_psd(frequencies, r)
    return s / s.mean()


def relative_rms_deviation(est: SpectrumEstimate, r: Reservoir, width: float = 3.0) -> float:
    """Relative RMS deviation from the target over ``||omega| - omega0| <= width*Gamma``."""
    target = target_psd(est.frequencies, r)
    band = np.abs(np.abs(est.frequencies) - r.omega0) <= width * r.gamma
    if not band.any():
        raise ValueError("no grid points inside the comparison band")
    d = est.power[band] - target[band]
    return float(np.sqrt(np.mean(d**2) / np.mean(target[band] ** 2)))


def write_trace_csv(trace: NoiseTrace, path, preamble: Iterable[str] = ()) -> None:
    header = {"gamma": trace.gamma, "omega0": trace.omega0, "tau": trace.tau, "seed": trace.seed}
    with open(path, "w") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write("index,value\n")
        for i, v in enumerate(trace.values):
            fh.write(f"{i},{v:.17e}\n")


def read_trace_csv(path) -> NoiseTrace:
    header, rows = None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("{"):
                    header = json.loads(body)
                continue
            if not line or line.startswith("index"):
                continue
            idx, val = line.split(",")
            if int(idx) != len(rows):
                raise ValueError(f"{path}: non-consecutive index {idx}")
            rows.append(float(val))
    if header is None:
        raise ValueError(f"{path}: missing JSON header")
    return NoiseTrace(header["tau"], np.array(rows), int(header["seed"]), header["gamma"], header["omega0"])

"""Finite-dimensional clock: Hamiltonian, time basis, Gaussian clock states.

The clock has ``d`` equally spaced energy levels ``n * 2*pi/T0`` and a basis of
time states

    |theta_k> = d**-0.5 * sum_n exp(-2j*pi*n*k/d) |E_n>,

which rotate into each other every ``T0/d`` seconds.  Time states are labelled
by absolute integers (``|theta_k> == |theta_{k+d}>``) so that a state carries
the window of labels on which its Gaussian envelope is centred.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

__all__ = [
    "Basis",
    "ClockParams",
    "ClockState",
    "StateMetrics",
    "build_hamiltonian",
    "window",
    "dft_time_to_energy",
    "dft_energy_to_time",
    "dft_direct",
    "dft_fft",
    "gaussian_state",
    "gaussian_normalization",
    "analytic_psi",
    "analytic_psi_tilde",
    "theta_state",
    "peres_spread",
    "state_metrics",
    "time_operator_expectation",
    "centered_labels",
    "commutator_residual",
    "commutator_diagonal",
]

NUMERIC_FLOOR = 1e-13


class Basis(str, enum.Enum):
    TIME = "time"
    ENERGY = "energy"


@dataclass(frozen=True)
class ClockParams:
    """Parameters of a clock and of a Gaussian clock state on it.

    Attributes:
        d: Hilbert-space dimension of the clock.
        T0: Clock period in seconds.
        sigma: Width of the Gaussian envelope in time-basis units, ``0 < sigma < d``.
        n0: Mean energy index, ``0 < n0 < d - 1``.
        k0: Centre of the state in time-basis units.
    """

    d: int
    T0: float = 1.0
    sigma: float | None = None
    n0: float | None = None
    k0: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if self.sigma is None:
            object.__setattr__(self, "sigma", math.sqrt(self.d))
        if self.n0 is None:
            object.__setattr__(self, "n0", (self.d - 1) / 2.0)
        if not (self.T0 > 0 and math.isfinite(self.T0)):
            raise ValueError(f"T0 must be positive and finite, got {self.T0!r}")
        if not 0 < self.sigma < self.d:
            raise ValueError(f"sigma must lie in (0, d) = (0, {self.d}), got {self.sigma!r}")
        if not 0 < self.n0 < self.d - 1:
            raise ValueError(f"n0 must lie in (0, d-1) = (0, {self.d - 1}), got {self.n0!r}")
        if not math.isfinite(self.k0):
            raise ValueError("k0 must be finite")
        object.__setattr__(self, "T0", float(self.T0))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "n0", float(self.n0))
        object.__setattr__(self, "k0", float(self.k0))

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T0

    @property
    def is_symmetric(self) -> bool:
        """True when ``sigma**2 == d`` up to a relative tolerance of 1e-9."""
        return abs(self.sigma**2 - self.d) <= 1e-9 * self.d

    @property
    def alpha0(self) -> float:
        """Distance of the mean energy from the nearest spectral edge, in (0, 1]."""
        return 1.0 - abs(1.0 - 2.0 * self.n0 / (self.d - 1))

    def with_(self, **changes) -> "ClockParams":
        values = dict(d=self.d, T0=self.T0, sigma=self.sigma, n0=self.n0, k0=self.k0)
        values.update(changes)
        return ClockParams(**values)

    @classmethod
    def symmetric(cls, d: int, T0: float = 1.0, k0: float = 0.0) -> "ClockParams":
        """Completely symmetric state: ``sigma = sqrt(d)`` and ``n0 = (d-1)/2``."""
        return cls(d=d, T0=T0, sigma=math.sqrt(d), n0=(d - 1) / 2.0, k0=k0)


@dataclass(frozen=True)
class ClockState:
    """Amplitudes of a clock state together with the time window they live on.

    In the time basis ``amps[i]`` is ``<theta_{window[i]}|psi>``.  In the energy
    basis ``amps[n]`` is ``<E_n|psi>`` for ``n = 0..d-1`` and ``window`` keeps
    the time labels to use on the way back.
    """

    amps: np.ndarray
    window: np.ndarray
    basis: Basis = Basis.TIME

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        win = np.array(self.window, dtype=np.int64).reshape(-1)
        if amps.shape != win.shape:
            raise ValueError("amps and window must have the same length")
        if win.size and np.any(np.diff(win) != 1):
            raise ValueError("window must contain consecutive increasing integers")
        amps.setflags(write=False)
        win.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "window", win)
        object.__setattr__(self, "basis", Basis(self.basis))

    @property
    def d(self) -> int:
        return int(self.amps.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def relabel(self, new_window: Sequence[int]) -> "ClockState":
        """Express a time-basis state on another window of ``d`` consecutive labels."""
        if self.basis is not Basis.TIME:
            raise ValueError("relabel requires a time-basis state")
        new_window = np.asarray(new_window, dtype=np.int64)
        if new_window.size != self.d:
            raise ValueError("new window must have d labels")
        shift = int(new_window[0] - self.window[0]) % self.d
        return ClockState(np.roll(self.amps, -shift), new_window, Basis.TIME)

    def to_energy(self, method: str = "auto") -> "ClockState":
        return dft_time_to_energy(self, method=method)

    def to_time(self, method: str = "auto") -> "ClockState":
        return dft_energy_to_time(self, method=method)

    def on_residues(self) -> np.ndarray:
        """Time amplitudes ordered by the residue ``k mod d`` (labels 0..d-1)."""
        if self.basis is not Basis.TIME:
            raise ValueError("on_residues requires a time-basis state")
        return np.roll(self.amps, int(self.window[0]) % self.d)


@dataclass(frozen=True)
class StateMetrics:
    l2_error: float
    trace_distance: float
    fidelity: float


def build_hamiltonian(p: ClockParams) -> np.ndarray:
    """Energy-diagonal clock Hamiltonian ``diag(n * 2*pi/T0)``, ``n = 0..d-1``."""
    return np.diag(np.arange(p.d) * p.omega).astype(complex)


def window(d: int, k0: float) -> np.ndarray:
    """The ``d`` consecutive integers ``k`` with ``-d/2 <= k0 - k < d/2``.

    Equivalently ``k0 - d/2 < k <= k0 + d/2``, so the largest label is
    ``floor(k0 + d/2)``.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    top = math.floor(k0 + d / 2.0)
    return np.arange(top - d + 1, top + 1, dtype=np.int64)


def _is_fast_length(d: int) -> bool:
    return scipy.fft.next_fast_len(d) == d


def dft_direct(values: np.ndarray, labels: np.ndarray, d: int, inverse: bool = False) -> np.ndarray:
    """O(d**2) transform between time labels and energy indices.

    Forward:  ``c_n = d**-0.5 * sum_j exp(-2j*pi*n*labels[j]/d) * values[j]``.
    Inverse:  ``a_j = d**-0.5 * sum_n exp(+2j*pi*n*labels[j]/d) * values[n]``.
    """
    n = np.arange(d)
    # reduce labels first so the phase argument stays small
    phase = np.outer(n, np.mod(labels, d)) * (2.0 * np.pi / d)
    kernel = np.exp(-1j * phase) / math.sqrt(d)
    if inverse:
        return kernel.conj().T @ values
    return kernel @ values


def dft_fft(values: np.ndarray, labels: np.ndarray, d: int, inverse: bool = False) -> np.ndarray:
    """FFT version of :func:`dft_direct` handling an arbitrary window offset."""
    offset = int(labels[0]) % d
    twiddle = np.exp(-2j * np.pi * np.arange(d) * offset / d)
    if inverse:
        return scipy.fft.ifft(values * twiddle.conj(), norm="ortho")
    return scipy.fft.fft(values, norm="ortho") * twiddle


def _dft(values, labels, d, inverse, method):
    if method == "auto":
        method = "fft" if _is_fast_length(d) else "direct"
    if method == "fft":
        return dft_fft(values, labels, d, inverse)
    if method == "direct":
        return dft_direct(values, labels, d, inverse)
    raise ValueError(f"unknown DFT method {method!r}")


def dft_time_to_energy(s: ClockState, method: str = "auto") -> ClockState:
    if s.basis is not Basis.TIME:
        raise ValueError("dft_time_to_energy expects a time-basis state")
    c = _dft(s.amps, s.window, s.d, inverse=False, method=method)
    return ClockState(c, s.window, Basis.ENERGY)


def dft_energy_to_time(s: ClockState, method: str = "auto") -> ClockState:
    if s.basis is not Basis.ENERGY:
        raise ValueError("dft_energy_to_time expects an energy-basis state")
    a = _dft(s.amps, s.window, s.d, inverse=True, method=method)
    return ClockState(a, s.window, Basis.TIME)


def gaussian_normalization(d: int, sigma: float, k0: float) -> float:
    """Exact normalisation constant ``A`` by finite summation over the window."""
    ks = window(d, k0)
    total = float(np.sum(np.exp(-2.0 * np.pi * (ks - k0) ** 2 / sigma**2)))
    if not total > 0 or not math.isfinite(total):
        raise FloatingPointError("Gaussian clock state is not normalisable in double precision")
    return 1.0 / math.sqrt(total)


def gaussian_state(p: ClockParams, normalized: bool = True, amplitude: float | None = None) -> ClockState:
    """Gaussian clock state centred at ``p.k0`` on the window ``window(d, k0)``.

    With ``normalized`` the prefactor is the exact ``A``; otherwise
    ``amplitude`` (default 1) is used.
    """
    ks = window(p.d, p.k0)
    if normalized:
        A = gaussian_normalization(p.d, p.sigma, p.k0)
    else:
        A = 1.0 if amplitude is None else float(amplitude)
    x = ks - p.k0
    amps = A * np.exp(-np.pi * x**2 / p.sigma**2) * np.exp(2j * np.pi * p.n0 * x / p.d)
    return ClockState(amps, ks, Basis.TIME)


def analytic_psi(p: ClockParams, x, A: float | None = None):
    """Analytic extension of the time amplitudes to real arguments."""
    if A is None:
        A = gaussian_normalization(p.d, p.sigma, p.k0)
    y = np.asarray(x, dtype=float) - p.k0
    out = A * np.exp(-np.pi * y**2 / p.sigma**2) * np.exp(2j * np.pi * p.n0 * y / p.d)
    return out if np.ndim(out) else complex(out)


def analytic_psi_tilde(p: ClockParams, p_arg, A: float | None = None):
    """Continuous Fourier transform of :func:`analytic_psi`.

    ``d**-0.5 * integral psi(x) exp(-2j*pi*p*x/d) dx`` in closed form.
    """
    if A is None:
        A = gaussian_normalization(p.d, p.sigma, p.k0)
    q = np.asarray(p_arg, dtype=float)
    out = (
        A
        * (p.sigma / math.sqrt(p.d))
        * np.exp(-np.pi * p.sigma**2 * (q - p.n0) ** 2 / p.d**2)
        * np.exp(-2j * np.pi * q * p.k0 / p.d)
    )
    return out if np.ndim(out) else complex(out)


def theta_state(d: int, k: int, labels: Sequence[int] | None = None) -> ClockState:
    """The time eigenstate ``|theta_k>`` on the given window (default ``0..d-1``)."""
    labels = np.arange(d) if labels is None else np.asarray(labels)
    amps = (np.mod(labels - k, d) == 0).astype(complex)
    return ClockState(amps, labels, Basis.TIME)


def peres_spread(d: int, k: int, x: float) -> np.ndarray:
    """Coefficients of ``exp(-i H x T0/d)|theta_k>`` on ``|theta_l>``, ``l = 0..d-1``.

    Uses ``(1/d) * (1 - e^{-2i pi u}) / (1 - e^{-2i pi u/d})`` with
    ``u = k + x - l`` reduced into ``[-d/2, d/2)``.  Both differences go
    through ``expm1`` so shifts close to an integer keep full precision; the
    removable point near ``u = 0`` uses the series ``1 - i pi u (d-1)/d``.
    """
    ls = np.arange(d)
    u = k + x - ls
    u = u - d * np.floor(u / d + 0.5)
    out = 1.0 - 1j * np.pi * u * (d - 1) / d
    nz = np.abs(u) >= 1e-8
    num = np.expm1(-2j * np.pi * u[nz])
    den = np.expm1(-2j * np.pi * u[nz] / d)
    out[nz] = num / (d * den)
    return out


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if np.min(w, initial=0.0) < -1e-10:
        raise ValueError("matrix is not positive semidefinite within 1e-10")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _as_density(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    return a


def state_metrics(a: np.ndarray, b: np.ndarray) -> StateMetrics:
    """Trace distance, Uhlmann fidelity and Frobenius distance of two states.

    Vectors are promoted to pure density matrices.
    """
    ra, rb = _as_density(a), _as_density(b)
    for r in (ra, rb):
        if abs(np.trace(r).real - 1.0) > 1e-10:
            raise ValueError("density matrices must have unit trace")
    diff = ra - rb
    td = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))
    sa = _psd_sqrt(ra)
    inner = sa @ rb @ sa
    fid = float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None))))
    return StateMetrics(
        l2_error=float(np.linalg.norm(diff)),
        trace_distance=min(max(td, 0.0), 1.0),
        fidelity=min(max(fid, 0.0), 1.0),
    )


def time_operator_expectation(s: ClockState, T0: float) -> tuple[float, float]:
    """Mean and variance of ``t_c = sum_{k=0}^{d-1} k T0/d |theta_k><theta_k|``."""
    probs = np.abs(s.on_residues()) ** 2
    probs = probs / probs.sum()
    times = np.arange(s.d) * T0 / s.d
    mean = float(probs @ times)
    var = float(probs @ (times - mean) ** 2)
    return mean, var


def centered_labels(d: int) -> np.ndarray:
    """Labels ``-(d-1)/2 .. (d-1)/2`` of the centred spectrum (``d`` odd)."""
    if d % 2 != 1:
        raise ValueError("the centred convention requires odd d")
    m = (d - 1) // 2
    return np.arange(-m, m + 1, dtype=np.int64)


def _centered_operators(d: int, T0: float) -> tuple[np.ndarray, np.ndarray]:
    """Time operator and Hamiltonian in the centred time basis, as dense matrices."""
    ks = centered_labels(d)
    ns = ks.copy()
    fourier = np.exp(-2j * np.pi * np.outer(ns, ks) / d) / math.sqrt(d)  # column k = |theta_k> in energy basis
    h_theta = fourier.conj().T @ np.diag(ns * (2 * np.pi / T0)) @ fourier
    t_theta = np.diag(ks * (T0 / d)).astype(complex)
    return t_theta, h_theta


def _centered_gaussian(p: ClockParams) -> np.ndarray:
    """Gaussian state with amplitudes on the centred labels.

    The centred energy index is ``n0 - (d-1)/2``; with this shift the state is
    the same vector as :func:`gaussian_state` up to a global phase.
    """
    ks_state = window(p.d, p.k0)
    n0c = p.n0 - (p.d - 1) / 2.0
    A = gaussian_normalization(p.d, p.sigma, p.k0)
    x = ks_state - p.k0
    amps = A * np.exp(-np.pi * x**2 / p.sigma**2) * np.exp(2j * np.pi * n0c * x / p.d)
    # place amplitudes on the centred labels via residues
    labels = centered_labels(p.d)
    out = np.empty(p.d, dtype=complex)
    pos = {int(k) % p.d: i for i, k in enumerate(labels)}
    for k, a in zip(ks_state, amps):
        out[pos[int(k) % p.d]] = a
    return out


def commutator_residual(p: ClockParams) -> float:
    """Measured ``|| [t_c, H_c] psi - i psi ||_2`` in the centred convention (``d`` odd)."""
    t_op, h_op = _centered_operators(p.d, p.T0)
    psi = _centered_gaussian(p)
    comm = t_op @ (h_op @ psi) - h_op @ (t_op @ psi)
    return float(np.linalg.norm(comm - 1j * psi))


def commutator_diagonal(d: int, T0: float = 1.0) -> np.ndarray:
    """``<theta_k|[t_c, H_c]|theta_k>`` for every centred label ``k``."""
    t_op, h_op = _centered_operators(d, T0)
    comm = t_op @ h_op - h_op @ t_op
    return np.diag(comm).copy()

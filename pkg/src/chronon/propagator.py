"""Time evolution of clock states under ``H_c`` and ``H_c + V_d``.

Three engines are provided: a free-evolution fast path (diagonal in the energy
basis), exact evolution through a cached eigendecomposition, and a
split-operator product formula with step doubling.  The analytic reference
state that the potential theorem compares against lives here as well.
"""

from __future__ import annotations

import enum
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg

from .clock_core import (
    Basis,
    ClockParams,
    ClockState,
    dft_energy_to_time,
    dft_time_to_energy,
    gaussian_normalization,
    window,
)
from .potentials import PeriodicPotential, potential_diagonal, theta_phase

__all__ = [
    "Method",
    "EvolutionSpec",
    "EigenCache",
    "EIGEN_CACHE",
    "evolve_free",
    "evolve_exact",
    "evolve_split",
    "evolve",
    "reference_state",
    "clock_hamiltonian_theta",
    "total_hamiltonian_theta",
    "shift_window",
    "ConvergenceError",
]


class ConvergenceError(RuntimeError):
    pass


class Method(str, enum.Enum):
    EXACT = "exact"
    SPLIT = "split"


@dataclass(frozen=True)
class EvolutionSpec:
    """What to evolve and how.

    ``steps`` fixes the number of split-operator steps; ``None`` means step
    doubling until successive results agree to ``tol``.  ``coupling`` scales
    the potential (the system eigenvalue multiplying ``V_d`` in joint dynamics).
    """

    clock: ClockParams
    t: float
    potential: PeriodicPotential | None = None
    method: Method = Method.EXACT
    steps: int | None = None
    strang: bool = True
    tol: float = 1e-9
    coupling: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.steps is not None and self.steps < 1:
            raise ValueError("split evolution requires steps >= 1")


def shift_window(s: ClockState, p: ClockParams, t: float) -> ClockState:
    """Relabel ``s`` onto the window of the centre reached after time ``t``."""
    return s.relabel(window(p.d, p.k0 + t * p.d / p.T0))


def _target_window(s: ClockState, p: ClockParams, t: float) -> np.ndarray:
    # the output window follows the nominal centre p.k0, so states that are
    # not Gaussian (time eigenstates, say) are relabelled consistently too
    return window(p.d, p.k0 + t * p.d / p.T0)


def evolve_free(s: ClockState, p: ClockParams, t: float, relabel: bool = True) -> ClockState:
    """``exp(-i t H_c) s`` via DFT, diagonal phases and inverse DFT."""
    if s.basis is not Basis.TIME:
        raise ValueError("evolve_free expects a time-basis state")
    energy = dft_time_to_energy(s)
    n = np.arange(p.d)
    # reduce the phase modulo 2*pi before exponentiating
    turns = np.mod(n * (t / p.T0), 1.0)
    phased = ClockState(energy.amps * np.exp(-2j * np.pi * turns), energy.window, Basis.ENERGY)
    out = dft_energy_to_time(phased)
    return out.relabel(_target_window(s, p, t)) if relabel else out


def clock_hamiltonian_theta(p: ClockParams, labels: np.ndarray) -> np.ndarray:
    """Dense ``H_c`` in the time basis ordered by ``labels``."""
    d = p.d
    n = np.arange(d)
    fourier = np.exp(-2j * np.pi * np.outer(n, np.mod(labels, d)) / d) / math.sqrt(d)
    h = fourier.conj().T @ (n[:, None] * p.omega * fourier)
    return (h + h.conj().T) / 2


def total_hamiltonian_theta(
    p: ClockParams, pot: PeriodicPotential | None, labels: np.ndarray, coupling: float = 1.0
) -> np.ndarray:
    h = clock_hamiltonian_theta(p, labels)
    if pot is not None and coupling != 0.0:
        h = h + np.diag(coupling * potential_diagonal(pot, p, labels))
    return h


class EigenCache:
    """Thread-safe LRU cache of eigendecompositions of ``H_c + c V_d``.

    Keys are ``(d, T0, potential key, coupling)``; eigenvectors are stored on
    the residue ordering ``0..d-1``.
    """

    def __init__(self, capacity: int = 32):
        self.capacity = capacity
        self._data: OrderedDict[Any, tuple[np.ndarray, np.ndarray]] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, p: ClockParams, pot: PeriodicPotential | None, coupling: float = 1.0):
        key = (p.d, p.T0, None if pot is None else pot.key(), float(coupling))
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                self.hits += 1
                return self._data[key]
        h = total_hamiltonian_theta(p, pot, np.arange(p.d), coupling)
        try:
            w, v = scipy.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            cond = np.linalg.cond(h)
            raise ConvergenceError(f"eigensolver failed (condition number {cond:.3e})") from exc
        with self._lock:
            self.misses += 1
            self._data[key] = (w, v)
            self._data.move_to_end(key)
            while len(self._data) > self.capacity:
                self._data.popitem(last=False)
        return w, v

    def clear(self) -> None:
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._data)


EIGEN_CACHE = EigenCache(32)


def evolve_exact(s: ClockState, spec: EvolutionSpec, cache: EigenCache | None = None, relabel: bool = True) -> ClockState:
    """``exp(-i t (H_c + c V_d)) s`` through a cached eigendecomposition."""
    if s.basis is not Basis.TIME:
        raise ValueError("evolve_exact expects a time-basis state")
    p = spec.clock
    if spec.potential is None or spec.coupling == 0.0:
        return evolve_free(s, p, spec.t, relabel=relabel)
    w, v = (cache or EIGEN_CACHE).get(p, spec.potential, spec.coupling)
    psi = s.on_residues()
    out = v @ (np.exp(-1j * w * spec.t) * (v.conj().T @ psi))
    res = ClockState(out, np.arange(p.d), Basis.TIME)
    return res.relabel(_target_window(s, p, spec.t) if relabel else s.window)


def _split_fixed(psi: np.ndarray, p: ClockParams, vdiag: np.ndarray, t: float, m: int, strang: bool) -> np.ndarray:
    """``m`` product-formula steps on residue-ordered amplitudes."""
    dt = t / m
    n = np.arange(p.d)
    kinetic = np.exp(-2j * np.pi * np.mod(n * (dt / p.T0), 1.0))
    if m > 4 * p.d:
        # many steps: raise the one-step matrix to the m-th power by squaring
        k_mat = np.fft.ifft(kinetic[:, None] * np.fft.fft(np.eye(p.d), axis=0), axis=0)
        if strang:
            half = np.exp(-0.5j * dt * vdiag)
            step = half[:, None] * k_mat * half[None, :]
        else:
            step = np.exp(-1j * dt * vdiag)[:, None] * k_mat
        return np.linalg.matrix_power(step, m) @ psi
    if strang:
        half = np.exp(-0.5j * dt * vdiag)
        full = half * half
        psi = half * psi
        for step in range(m):
            psi = np.fft.ifft(kinetic * np.fft.fft(psi))
            psi = (full if step < m - 1 else half) * psi
        return psi
    pot_phase = np.exp(-1j * dt * vdiag)
    for _ in range(m):
        psi = pot_phase * np.fft.ifft(kinetic * np.fft.fft(psi))
    return psi


def evolve_split(s: ClockState, spec: EvolutionSpec, relabel: bool = True, max_steps: int = 2**24) -> ClockState:
    """Split-operator evolution, Strang by default and Lie with ``strang=False``.

    With ``spec.steps`` unset the number of steps doubles from 1 until two
    successive results differ by less than ``spec.tol`` in the 2-norm.
    """
    if s.basis is not Basis.TIME:
        raise ValueError("evolve_split expects a time-basis state")
    p = spec.clock
    vdiag = (
        np.zeros(p.d)
        if spec.potential is None
        else spec.coupling * potential_diagonal(spec.potential, p, np.arange(p.d))
    )
    psi0 = s.on_residues()
    if spec.steps is not None:
        out = _split_fixed(psi0, p, vdiag, spec.t, spec.steps, spec.strang)
    else:
        m = 1
        prev = _split_fixed(psi0, p, vdiag, spec.t, m, spec.strang)
        while True:
            m *= 2
            if m > max_steps:
                raise ConvergenceError(f"split evolution did not reach tol={spec.tol} within {max_steps} steps")
            cur = _split_fixed(psi0, p, vdiag, spec.t, m, spec.strang)
            if np.linalg.norm(cur - prev) < spec.tol:
                out = cur
                break
            prev = cur
    res = ClockState(out, np.arange(p.d), Basis.TIME)
    return res.relabel(_target_window(s, p, spec.t) if relabel else s.window)


def evolve(s: ClockState, spec: EvolutionSpec) -> ClockState:
    if spec.method is Method.SPLIT:
        return evolve_split(s, spec)
    return evolve_exact(s, spec)


def reference_state(p: ClockParams, pot: PeriodicPotential | None, t: float, delta0: float = 0.0) -> ClockState:
    """Shifted Gaussian carrying the accumulated potential phase.

    Amplitudes ``exp(-i Theta(delta; k)) * psi_nor(k0'; k)`` on ``window(d, k0')``
    with ``k0' = k0 + t d/T0`` and ``delta = delta0 + t d/T0``.
    """
    shift = t * p.d / p.T0
    k0n = p.k0 + shift
    ks = window(p.d, k0n)
    A = gaussian_normalization(p.d, p.sigma, k0n)
    x = ks - k0n
    amps = A * np.exp(-np.pi * x**2 / p.sigma**2) * np.exp(2j * np.pi * p.n0 * x / p.d)
    if pot is not None:
        amps = amps * np.exp(-1j * np.asarray(theta_phase(pot, p.d, delta0 + shift, ks)))
    return ClockState(amps, ks, Basis.TIME)

"""Periodic control potentials and the decay-rate bookkeeping built on them.

A potential ``V0`` is a smooth, real, ``2*pi``-periodic function whose integral
over one period is ``omega``.  The clock sees the stretched version
``V_d(x) = (2*pi/d) * V0(2*pi*x/d)`` through the time-diagonal operator
``(d/T0) * sum_k V_d(k) |theta_k><theta_k|``.
"""

from __future__ import annotations

import abc
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, NamedTuple

import numpy as np
import scipy.integrate
from scipy.special import gammaln

from .clock_core import ClockParams, window

__all__ = [
    "KAPPA",
    "COSINE_THRESHOLD",
    "PeriodicPotential",
    "CosinePotential",
    "ConstantPotential",
    "FunctionPotential",
    "DecayParams",
    "NumericB",
    "Scheme",
    "ScheduleResult",
    "cosine_amplitude",
    "cosine_b",
    "numeric_b",
    "decay_params",
    "v_d",
    "theta_phase",
    "potential_operator",
    "potential_diagonal",
    "tilde_epsilon_v_bound",
    "tilde_epsilon_v_exact",
    "schedule_n",
    "potential_from_dict",
]

#: Bell-number constant entering the rate parameter.
KAPPA = 0.792

#: ``|omega| * sqrt(n)`` above which the cosine potential's ``b`` grows like ``n**1.5``.
COSINE_THRESHOLD = (2.0 * math.pi) ** 1.5 / (math.sqrt(2.0) * math.e**2)


class PeriodicPotential(abc.ABC):
    """Interface for a real ``2*pi``-periodic potential."""

    omega: float

    @abc.abstractmethod
    def evaluate(self, x):
        """V0(x), vectorised over numpy arrays."""

    @abc.abstractmethod
    def integral(self, a, b):
        """Integral of V0 from ``a`` to ``b`` (vectorised)."""

    @property
    @abc.abstractmethod
    def b_const(self) -> float:
        """An upper bound on the derivative-growth supremum of V0."""

    @abc.abstractmethod
    def scaled(self, factor: float) -> "PeriodicPotential":
        """The potential ``factor * V0`` (its ``omega`` scales by ``factor``)."""

    @abc.abstractmethod
    def key(self) -> tuple:
        """Hashable identity used by propagator caches."""

    def to_dict(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no JSON form")

    def __call__(self, x):
        return self.evaluate(x)


def cosine_amplitude(n: int, omega: float) -> float:
    """``A_c = omega * 2**(2n) / (2*pi * C(2n, n))`` computed in log space."""
    if omega == 0:
        return 0.0
    log_binom = gammaln(2 * n + 1) - 2.0 * gammaln(n + 1)
    log_mag = math.log(abs(omega)) + 2 * n * math.log(2.0) - math.log(2.0 * math.pi) - log_binom
    return math.copysign(math.exp(log_mag), omega)


def cosine_b(n: int, omega: float) -> float:
    """Derivative-growth constant ``b`` of the cosine potential."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if abs(omega) * math.sqrt(n) >= COSINE_THRESHOLD:
        return 2.0 * math.e**2 / ((2.0 * math.pi) ** 1.5 * math.sqrt(2.0)) * abs(omega) * n * math.sqrt(n)
    return float(n)


@dataclass(frozen=True)
class CosinePotential(PeriodicPotential):
    """``V0(x) = A_c * cos((x - x0)/2)**(2n)``, peaked at ``x0``, integrating to ``omega`` per period."""

    n: int
    omega: float = 1.0
    x0: float = math.pi

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "x0", float(self.x0))

    @cached_property
    def amplitude(self) -> float:
        return cosine_amplitude(self.n, self.omega)

    @cached_property
    def _harmonics(self) -> np.ndarray:
        # c_j = A_c 2^{-2n} C(2n, n+j) = (omega/2pi) C(2n,n+j)/C(2n,n), j = 1..n
        n = self.n
        j = np.arange(1, n + 1)
        log_ratio = 2.0 * gammaln(n + 1) - gammaln(n + j + 1) - gammaln(n - j + 1)
        return (self.omega / (2.0 * math.pi)) * np.exp(log_ratio)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.cos((x - self.x0) / 2.0) ** (2 * self.n)

    def integral(self, a, b):
        """Exact antiderivative from ``cos**(2n)(y/2) = 4**-n * sum_k C(2n,k) e^{i(k-n)y}``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        j = np.arange(1, self.n + 1)
        weights = 2.0 * self._harmonics / j
        sb = np.sin(np.multiply.outer(b - self.x0, j))
        sa = np.sin(np.multiply.outer(a - self.x0, j))
        osc = (sb - sa) @ weights
        out = self.omega / (2.0 * math.pi) * (b - a) + osc
        return out if np.ndim(out) else float(out)

    @property
    def b_const(self) -> float:
        return cosine_b(self.n, self.omega)

    def scaled(self, factor: float) -> "CosinePotential":
        return CosinePotential(self.n, self.omega * factor, self.x0)

    def key(self) -> tuple:
        return ("cosine", self.n, self.omega, self.x0)

    def to_dict(self) -> dict:
        return {"type": "cosine", "n": self.n, "omega": self.omega, "x0": self.x0}


@dataclass(frozen=True)
class ConstantPotential(PeriodicPotential):
    """Flat potential ``V0 = omega / (2*pi)``; ``omega = 0`` is the free clock."""

    omega: float = 0.0

    def evaluate(self, x):
        level = self.omega / (2.0 * math.pi)
        return np.full(np.shape(x), level) if np.ndim(x) else level

    def integral(self, a, b):
        out = self.omega / (2.0 * math.pi) * (np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
        return out if np.ndim(out) else float(out)

    @property
    def b_const(self) -> float:
        # only the k = 1 term of the supremum is nonzero
        return abs(self.omega) / math.pi

    def scaled(self, factor: float) -> "ConstantPotential":
        return ConstantPotential(self.omega * factor)

    def key(self) -> tuple:
        return ("constant", self.omega)

    def to_dict(self) -> dict:
        return {"type": "constant", "omega": self.omega}


class FunctionPotential(PeriodicPotential):
    """A user supplied ``2*pi``-periodic function.

    Integrals use adaptive Gauss-Kronrod quadrature; ``omega`` is measured on
    construction and ``b`` is estimated with :func:`numeric_b`.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], name: str = "function", factor: float = 1.0):
        self._func = func
        self._factor = float(factor)
        self.name = name
        self.omega = self._quad(0.0, 2.0 * math.pi)

    def evaluate(self, x):
        return self._factor * np.asarray(self._func(np.asarray(x, dtype=float)), dtype=float)

    def _quad(self, a: float, b: float) -> float:
        val, _ = scipy.integrate.quad(lambda y: float(self.evaluate(y)), a, b, epsabs=1e-13, epsrel=1e-10, limit=400)
        return float(val)

    def integral(self, a, b):
        a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        if a_arr.ndim == 0:
            return self._quad(float(a_arr), float(b_arr))
        return np.vectorize(self._quad, otypes=[float])(a_arr, b_arr)

    @cached_property
    def _numeric_b(self) -> "NumericB":
        return numeric_b(self)

    @property
    def b_const(self) -> float:
        return self._numeric_b.value

    def scaled(self, factor: float) -> "FunctionPotential":
        return FunctionPotential(self._func, self.name, self._factor * factor)

    def key(self) -> tuple:
        return ("function", self.name, id(self._func), self._factor)


def potential_from_dict(spec: Mapping) -> PeriodicPotential:
    """Build a potential from its JSON description."""
    spec = dict(spec)
    kind = spec.pop("type", None)
    if kind == "cosine":
        return CosinePotential(n=spec.pop("n"), omega=spec.pop("omega", 1.0), x0=spec.pop("x0", math.pi))
    if kind == "constant":
        return ConstantPotential(omega=spec.pop("omega", 0.0))
    if kind == "zero":
        return ConstantPotential(0.0)
    raise ValueError(f"unknown potential type {kind!r}")


class NumericB(NamedTuple):
    value: float
    converged: bool
    per_order: np.ndarray


def numeric_b(pot: PeriodicPotential, k_max: int = 40, grid: int = 4096) -> NumericB:
    """Estimate ``sup_k (2 max|V0^(k-1)|)**(1/k)`` for ``k = 1..k_max``.

    Derivatives come from spectral differentiation of ``grid`` periodic samples.
    Fourier coefficients below ``1e-13`` of the largest are dropped since they
    are indistinguishable from rounding noise.  The result is flagged as
    converged when the last two orders raise the running maximum by less than 1%.
    """
    if k_max < 3:
        raise ValueError("k_max must be at least 3")
    x = np.arange(grid) * (2.0 * math.pi / grid)
    coeffs = np.fft.rfft(pot.evaluate(x))
    coeffs[np.abs(coeffs) < 1e-13 * np.max(np.abs(coeffs))] = 0.0
    m = np.arange(coeffs.size)
    terms = np.empty(k_max)
    for k in range(1, k_max + 1):
        deriv = np.fft.irfft(coeffs * (1j * m) ** (k - 1), n=grid)
        peak = 2.0 * float(np.max(np.abs(deriv)))
        terms[k - 1] = peak ** (1.0 / k) if peak > 0 else 0.0
    best_early = float(np.max(terms[:-2]))
    best = float(np.max(terms))
    converged = best <= 1.01 * best_early
    return NumericB(best, converged, terms)


@dataclass(frozen=True)
class DecayParams:
    """Rate parameters for a potential acting on a Gaussian clock state.

    ``upsilon_bar`` and ``N_script`` are ``None`` when ``pi*alpha0*sigma**2 <= 1``
    with ``b > 0`` (the rate parameter is then undefined) and ``valid`` is False.
    """

    b: float
    alpha0: float
    upsilon_bar: float | None
    kappa: float
    N_script: int | None
    zeta: float
    valid: bool


def decay_params(pot: PeriodicPotential | float, p: ClockParams) -> DecayParams:
    """Rate parameters; ``pot`` may also be a bare ``b`` value."""
    b = float(pot) if isinstance(pot, (int, float)) else float(pot.b_const)
    a0 = p.alpha0
    log_arg = math.pi * a0 * p.sigma**2
    zeta = (1.0 + KAPPA * math.pi * b / math.log(math.pi * p.d)) ** 2
    if b == 0.0:
        ups = 0.0
    elif log_arg > 1.0:
        ups = math.pi * a0 * KAPPA * b / math.log(log_arg)
    else:
        return DecayParams(b, a0, None, KAPPA, None, zeta, False)
    if p.is_symmetric:
        n_script = math.floor(math.pi * a0**2 / (2.0 * (ups + 1.0) ** 2) * p.d)
    else:
        n_script = math.floor(
            math.pi * a0**2 / (2.0 * (ups + p.d / p.sigma**2) ** 2) * (p.d / p.sigma) ** 2
        )
    return DecayParams(b, a0, ups, KAPPA, int(n_script), zeta, True)


def v_d(pot: PeriodicPotential, d: int, x):
    """Stretched potential ``(2*pi/d) * V0(2*pi*x/d)`` with period ``d``."""
    return (2.0 * math.pi / d) * pot.evaluate(2.0 * math.pi * np.asarray(x, dtype=float) / d)


def theta_phase(pot: PeriodicPotential, d: int, delta, x):
    """Accumulated phase ``Theta(delta; x) = integral_{x-delta}^{x} V_d``."""
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    scale = 2.0 * math.pi / d
    return pot.integral(scale * (x - delta), scale * x)


def potential_diagonal(pot: PeriodicPotential, p: ClockParams, labels=None) -> np.ndarray:
    """Diagonal ``(d/T0) * V_d(k)`` of the clock potential operator on ``labels``.

    Values are computed from ``k mod d`` so that windows differing by a
    multiple of ``d`` give bitwise identical results.
    """
    labels = window(p.d, p.k0) if labels is None else np.asarray(labels)
    residues = np.mod(labels, p.d)
    return (p.d / p.T0) * v_d(pot, p.d, residues)


def potential_operator(pot: PeriodicPotential, p: ClockParams, labels=None) -> np.ndarray:
    """Time-diagonal Hermitian matrix of the clock potential operator."""
    return np.diag(potential_diagonal(pot, p, labels)).astype(complex)


def tilde_epsilon_v_bound(n: int, x_vr: float) -> float:
    """Upper bound on the cosine potential's mass outside ``[x0 - x_vr, x0 + x_vr]``.

    Requires ``cos(x_vr) <= 1 - 1/n``.
    """
    if not 0 < x_vr <= math.pi:
        raise ValueError("x_vr must lie in (0, pi]")
    if math.cos(x_vr) > 1.0 - 1.0 / n + 1e-12:
        raise ValueError(f"precondition cos(x_vr) <= 1 - 1/n fails for n={n}, x_vr={x_vr}")
    return (math.pi - x_vr) * math.e**2 / (4.0 * math.pi * math.sqrt(math.pi)) * math.sqrt(n) * math.cos(x_vr / 2.0) ** (2 * n)


def tilde_epsilon_v_exact(pot: PeriodicPotential, x0: float, x_vr: float) -> float:
    """``omega - integral_{x0-x_vr}^{x0+x_vr} V0``: the potential mass outside the peak window."""
    return float(pot.omega - pot.integral(x0 - x_vr, x0 + x_vr))


class Scheme(str, enum.Enum):
    POWER_LAW = "power_law"
    FASTER_THAN_POWER = "faster_than_power"
    SMALLEST_CLOCK_ERROR = "smallest_clock_error"


class ScheduleResult(NamedTuple):
    n: int
    n_real: float
    gamma: float
    tags: dict


def _chi1(d: int, x_vr: float, alpha0: float) -> float:
    c = (2.0 * math.pi) ** 1.5 * math.sqrt(2.0) / (2.0 * math.e**2)
    return (
        c
        * (1.0 + math.log(math.pi * alpha0) / math.log(d))
        * (-2.0 * math.log(math.cos(x_vr / 2.0))) ** 1.5
        / (math.pi * KAPPA * alpha0)
    )


def schedule_n(
    d: int,
    scheme: Scheme | str,
    *,
    x_vr: float,
    gamma1: float | None = None,
    gamma3: float | None = None,
    alpha0: float = 1.0,
) -> ScheduleResult:
    """Cosine steepness ``n(d)`` for the three example schedules.

    ``power_law`` needs ``gamma1``; ``smallest_clock_error`` needs ``gamma3``;
    ``faster_than_power`` derives ``gamma1`` from ``d``, ``x_vr`` and ``alpha0``.
    """
    scheme = Scheme(scheme)
    if d < 2:
        raise ValueError("d must be >= 2")
    ln_d = math.log(d)
    if scheme is Scheme.SMALLEST_CLOCK_ERROR:
        if gamma3 is None or gamma3 <= 0:
            raise ValueError("smallest_clock_error requires gamma3 > 0")
        c = math.cos(x_vr)
        if c <= 0:
            raise ValueError("smallest_clock_error requires cos(x_vr) > 0")
        n_real = gamma3 * ln_d ** (2.0 / 3.0) / (-2.0 * math.log(c))
        tags = {"eps_tilde_V": "d**(-gamma3 * ln(d)**(-1/3))", "upsilon_bar": "bounded"}
        gamma = gamma3
    else:
        c = math.cos(x_vr / 2.0)
        if scheme is Scheme.POWER_LAW:
            if gamma1 is None or gamma1 <= 0:
                raise ValueError("power_law requires gamma1 > 0")
            gamma = gamma1
            tags = {"eps_tilde_V": "d**(-gamma1)", "trace_distance": "o(d**-m) for m < gamma1"}
        else:
            chi1 = _chi1(d, x_vr, alpha0)
            chi2 = chi1 * (math.pi / 4.0 * alpha0**2 * chi1**2) ** (-3.0 / 8.0)
            gamma = math.pi / 4.0 * alpha0**2 * chi2**2 * d**0.25 / math.sqrt(ln_d)
            tags = {"eps_tilde_V": "exp(-c d**(1/4) sqrt(ln d))", "trace_distance": "faster than any power"}
        n_real = gamma * ln_d / (-2.0 * math.log(c))
    return ScheduleResult(max(1, int(round(n_real))), n_real, gamma, tags)

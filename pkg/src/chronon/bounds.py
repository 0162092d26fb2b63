"""Analytic error bounds, each returned with all of its sub-terms.

Every bound is a :class:`BoundReport` whose ``total`` is a linear combination
``sum(weights[name] * terms[name])`` of named, nonnegative sub-terms, so the
assembly can be audited independently of the formulas for the pieces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .clock_core import ClockParams
from .potentials import PeriodicPotential, decay_params

__all__ = [
    "Regime",
    "BoundReport",
    "normalization_errors",
    "normalization_bracket",
    "amplitude_upper",
    "eps_nor_bound",
    "eps_nor_exact",
    "eps_step_bound",
    "eps_total_bound",
    "bound_epsilon_c",
    "eps_bar2_bound",
    "eps_T_bound",
    "bound_epsilon_v",
    "commutator_terms",
    "bound_commutator",
    "gaussian_tail",
    "energy_basis_bound",
    "unitary_error_chain",
]

_EXP = math.exp
_PI = math.pi


class Regime(str, enum.Enum):
    SIGMA_SQRT_D = "sigma_sqrt_d"
    GENERAL = "general"


@dataclass(frozen=True)
class BoundReport:
    """A bound value with its sub-terms and how they combine.

    ``weights`` maps a subset of ``terms`` to the coefficient it carries in
    ``total``; terms without a weight are diagnostic only.
    """

    name: str
    total: float
    terms: Mapping[str, float]
    weights: Mapping[str, float]
    regime: Regime
    valid: bool
    info: Mapping[str, object] = field(default_factory=dict)

    def recombine(self) -> float:
        return math.fsum(w * self.terms[k] for k, w in self.weights.items())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "total": self.total,
            "terms": dict(self.terms),
            "weights": dict(self.weights),
            "regime": self.regime.value,
            "valid": self.valid,
            "info": {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in self.info.items()},
        }


def _report(name: str, terms: dict, weights: dict, regime: Regime, valid: bool = True, **info) -> BoundReport:
    for k in weights:
        if not terms[k] >= 0:  # rejects NaN as well as negative values
            raise FloatingPointError(f"sub-term {k} of {name} is {terms[k]}")
    total = math.fsum(w * terms[k] for k, w in weights.items())
    return BoundReport(name, total, terms, weights, regime, valid, info)


def _regime(p: ClockParams) -> Regime:
    return Regime.SIGMA_SQRT_D if p.is_symmetric else Regime.GENERAL


def normalization_errors(p: ClockParams) -> tuple[float, float]:
    """Window-truncation and Poisson-aliasing errors of ``1/A**2``.

    The aliasing term carries the ``sigma/sqrt(2)`` weight of the Fourier
    coefficients of the sampled Gaussian.
    """
    d, s = p.d, p.sigma
    e1 = 2.0 * _EXP(-_PI * d**2 / (2.0 * s**2)) / (1.0 - _EXP(-2.0 * _PI * d / s**2))
    e2 = 2.0 * _EXP(-_PI * s**2 / 2.0) / (1.0 - _EXP(-_PI * s**2))
    return e1, (s / math.sqrt(2.0)) * e2


def normalization_bracket(p: ClockParams) -> tuple[float, float]:
    """Lower and upper bounds on ``A**2`` for a Gaussian of width ``sigma`` on ``d`` levels.

    From ``1/A**2 = x + e`` with ``x = sigma/sqrt(2)`` and ``|e| <= eps1_bar + eps2_bar``.
    The upper side inverts ``x - e`` exactly; it is infinite when the error
    bound reaches ``x``.
    """
    x = p.sigma / math.sqrt(2.0)
    e = sum(normalization_errors(p))
    centre = 1.0 / x
    lower = centre - e / (x * (x + e))
    upper = centre + e / (x * (x - e)) if e < x else math.inf
    return lower, upper


def amplitude_upper(p: ClockParams) -> float:
    """Conservative ``A`` used inside every bound: the square root of the upper bracket."""
    return math.sqrt(normalization_bracket(p)[1])


def eps_nor_bound(p: ClockParams) -> float:
    """Bound on the renormalisation mismatch ``|A(k0)/A(k0') - 1|`` for any shift.

    Both normalisation sums equal ``x + e`` with ``x = sigma/sqrt(2)`` and
    ``|e| <= E`` (see :func:`normalization_errors`), so the mismatch is at most
    ``sqrt((x+E)/(x-E)) - 1``.  The closed exponential form is kept whenever it
    is larger; on its own it misses the aliasing weight for narrow states.
    """
    d, s = p.d, p.sigma
    if p.is_symmetric:
        closed = 8.0 * math.sqrt(2.0 / d) * _EXP(-_PI * d / 2.0) / (1.0 - _EXP(-_PI * d))
    else:
        closed = (4.0 * math.sqrt(2.0) / s) * (
            _EXP(-_PI * d**2 / (2.0 * s**2)) / (1.0 - _EXP(-2.0 * _PI * d / s**2))
            + _EXP(-_PI * s**2 / 2.0) / (1.0 - _EXP(-_PI * s**2))
        )
    x = s / math.sqrt(2.0)
    e = sum(normalization_errors(p))
    direct = math.sqrt((x + e) / (x - e)) - 1.0 if e < x else math.inf
    return max(closed, direct)


def eps_nor_exact(p: ClockParams, t: float) -> float:
    """The renormalisation mismatch as an exact ratio of finite sums (diagnostic).

    The numerator runs over the window of the shifted centre, the denominator
    over the initial window.
    """
    from .clock_core import window

    shift = p.d * t / p.T0
    ks0 = window(p.d, p.k0)
    ks1 = window(p.d, p.k0 + shift)
    num = np.sum(np.exp(-2.0 * _PI * (ks1 - p.k0 - shift) ** 2 / p.sigma**2))
    den = np.sum(np.exp(-2.0 * _PI * (ks0 - p.k0) ** 2 / p.sigma**2))
    return abs(math.sqrt(num / den) - 1.0)


def eps_step_bound(p: ClockParams, A: float | None = None) -> float:
    A = amplitude_upper(p) if A is None else A
    if p.is_symmetric:
        return 2.0 * A * _EXP(-_PI * p.d / 4.0)
    return 2.0 * A * _EXP(-_PI * p.d**2 / (4.0 * p.sigma**2))


def eps_total_bound(p: ClockParams, A: float | None = None) -> float:
    A = amplitude_upper(p) if A is None else A
    d, s, a0 = p.d, p.sigma, p.alpha0
    if p.is_symmetric:
        inner = 2.0 * math.sqrt(d) * (a0 / 2.0 + 1.0 / (2.0 * _PI * d) + 1.0 / (1.0 - _EXP(-_PI * a0))) * _EXP(
            -_PI * d * a0**2 / 4.0
        ) + (2.0 / (1.0 - _EXP(-_PI)) + 0.5 + 1.0 / (2.0 * _PI * d)) * _EXP(-_PI * d / 4.0)
    else:
        inner = 2.0 * s * (a0 / 2.0 + 1.0 / (2.0 * _PI * s**2) + 1.0 / (1.0 - _EXP(-_PI * s**2 * a0))) * _EXP(
            -_PI * s**2 * a0**2 / 4.0
        ) + (
            1.0 / (1.0 - _EXP(-_PI * d / s**2))
            + 1.0 / (1.0 - _EXP(-_PI * d**2 / s**2))
            + d / (2.0 * s**2)
            + 1.0 / (2.0 * _PI * d)
        ) * _EXP(-_PI * d**2 / (4.0 * s**2))
    return 2.0 * _PI * A * d * inner


def bound_epsilon_c(p: ClockParams, t: float) -> BoundReport:
    """Bound on the free-evolution deviation from the shifted Gaussian after time ``t``."""
    A = amplitude_upper(p)
    steps = abs(t) * p.d / p.T0
    terms = {
        "eps_total": eps_total_bound(p, A),
        "eps_step": eps_step_bound(p, A),
        "eps_nor": eps_nor_bound(p),
        "A_upper": A,
        "steps": steps,
    }
    weights = {"eps_total": steps, "eps_step": steps + 1.0, "eps_nor": 1.0}
    return _report("epsilon_c", terms, weights, _regime(p), t=t)


def eps_bar2_bound(p: ClockParams, b: float, A: float | None = None) -> tuple[float, str, dict]:
    """Sampled Fourier-transform error with a potential; returns (value, branch, params)."""
    A = amplitude_upper(p) if A is None else A
    dp = decay_params(b, p)
    d, s, a0 = p.d, p.sigma, p.alpha0
    ups = dp.upsilon_bar
    use_exp = dp.valid and dp.N_script is not None and dp.N_script >= 8 and ups is not None and ups >= 0
    if use_exp:
        pref = (2.0 * _PI) ** 1.25 * A * (1.0 + _PI**2 / 8.0)
        if p.is_symmetric:
            val = pref * d**0.75 * math.sqrt(math.e / 2.0 * a0 / (ups + 1.0)) * _EXP(
                -_PI / 4.0 * a0**2 / (1.0 + ups) ** 2 * d
            )
        else:
            val = pref * s**1.5 * math.sqrt(math.e / 2.0 * a0 / (ups * s**2 / d + 1.0)) * _EXP(
                -_PI / 4.0 * a0**2 / (d / s**2 + ups) ** 2 * (d / s) ** 2
            )
        branch = "exponential"
    else:
        pref = 3.0**1.75 / (math.sqrt(2.0 * _PI) * math.e) * A * (8.0 + _PI**2) / a0**3
        lead = dp.kappa * math.sqrt(6.0 * _PI) / math.log(3.0) * b
        if p.is_symmetric:
            val = pref * (lead + math.sqrt(d)) ** 3 * d**-2.5
        else:
            val = pref * (lead + d / s) ** 3 * (s / d**3)
        branch = "polynomial"
    info = {"b": b, "upsilon_bar": ups, "N_script": dp.N_script, "alpha0": a0, "rate_params_valid": dp.valid}
    return val, branch, info


def eps_T_bound(p: ClockParams, b: float, A: float | None = None) -> tuple[float, float, str, dict]:
    """Per-step error with a potential: returns (eps_T, |eps_bar2|, branch, params)."""
    A = amplitude_upper(p) if A is None else A
    e2, branch, info = eps_bar2_bound(p, b, A)
    d, s = p.d, p.sigma
    if p.is_symmetric:
        rest = 2.0 * A * (
            2.0 * _PI / (1.0 - _EXP(-_PI))
            + (b + 2.0 * _PI / d) / (1.0 - _EXP(-_PI * d))
            + (2.0 * _PI + _PI * d + 1.0 / d)
        ) * _EXP(-_PI * d / 4.0)
    else:
        rest = 2.0 * A * (
            2.0 * _PI / (1.0 - _EXP(-_PI * d / s**2))
            + (b + 2.0 * _PI / d) / (1.0 - _EXP(-_PI * d**2 / s**2))
            + (2.0 * _PI * d / s**2 + _PI * d**2 / s**2 + 1.0 / d)
        ) * _EXP(-_PI * d**2 / (4.0 * s**2))
    return e2 + rest, e2, branch, info


def bound_epsilon_v(p: ClockParams, pot: PeriodicPotential | None, t: float, b: float | None = None) -> BoundReport:
    """Bound on the deviation from the phase-carrying reference state under ``H_c + V_d``.

    ``b`` defaults to the potential's own constant.  ``valid`` reports whether
    the rate parameter is well defined (``pi*alpha0*sigma**2 > 1`` or ``b = 0``);
    which of the two proven estimates for the sampled transform fired is
    recorded in ``info['branch']``.
    """
    if b is None:
        b = 0.0 if pot is None else float(pot.b_const)
    A = amplitude_upper(p)
    eps_T, e2, branch, info = eps_T_bound(p, b, A)
    steps = abs(t) * p.d / p.T0
    terms = {
        "eps_T": eps_T,
        "eps_bar2": e2,
        "eps_step": eps_step_bound(p, A),
        "eps_nor": eps_nor_bound(p),
        "A_upper": A,
        "steps": steps,
    }
    weights = {"eps_T": steps, "eps_step": steps + 1.0, "eps_nor": 1.0}
    valid = bool(info["rate_params_valid"])
    return _report("epsilon_v", terms, weights, _regime(p), valid, t=t, branch=branch, **info)


def _alpha_beta_bar(p: ClockParams) -> tuple[float, float]:
    n0c = p.n0 - (p.d - 1) / 2.0
    return abs(2.0 * n0c / p.d), abs(2.0 * p.k0 / p.d)


def commutator_terms(p: ClockParams) -> dict[str, float]:
    """The eight error pieces of the quasi-canonical commutation bound."""
    if p.d % 2 != 1:
        raise ValueError("the commutator bound requires odd d")
    d, s = p.d, p.sigma
    A = amplitude_upper(p)
    al, be = _alpha_beta_bar(p)
    if not (al < 1 and be < 1):
        raise ValueError("centred energy and time offsets must satisfy alpha_bar, beta_bar < 1")
    E = _EXP
    if p.is_symmetric:
        q = 1.0 - E(-_PI * d * (1.0 - al))
        r = 1.0 - E(-_PI)
        g = E(-_PI * d / 4.0)
        e1 = 2.0 * A * E(-_PI * d * (1.0 - be) ** 2 / 4.0) / (1.0 - E(-_PI * (1.0 - be)))
        e2 = A * math.sqrt(d) * (1.0 + 1.0 / _PI + be / r) * g
        e3 = 2.0 * _PI * A * d**2 * math.sqrt(d) * (
            (1.0 - al)
            + (1.0 / (_PI * d)) * (2.0 + 1.0 / q)
            + (be / 2.0) * (1.0 - al + 1.0 / (_PI * d) + (1.0 + al) / q)
        ) * E(-_PI * d * (1.0 - al) ** 2 / 4.0)
        e4 = d * A * (
            d * (_PI + 1.0) * (1.0 + be) + 2.0 + 2.0 / r + al * (d * (_PI + 1.0) + _PI * be / r)
        ) * g
        e5 = 2.0 * math.sqrt(d) * A * g / r
        e6 = 2.0 * _PI * A * d**2 * math.sqrt(d) * (
            (1.0 - al) / 2.0 + 1.0 / (2.0 * _PI * d) + ((1.0 + al) / 2.0) / q
        ) * E(-_PI * d * (1.0 - al) ** 2 / 4.0)
        e7 = 2.0 * _PI * d * A * (1.0 + 1.0 / _PI + al / r) * g
        e8 = _PI * d * A * (1.0 - be + 1.0 / _PI + al / (1.0 - E(-_PI * (1.0 - be)))) * E(
            -_PI * d * (1.0 - be) ** 2 / 4.0
        )
    else:
        q = 1.0 - E(-_PI * s**2 * (1.0 - al))
        r = 1.0 - E(-_PI * d / s**2)
        g = E(-_PI * d**2 / (4.0 * s**2))
        e1 = 2.0 * A * E(-_PI * d**2 * (1.0 - be) ** 2 / (4.0 * s**2)) / (1.0 - E(-_PI * d * (1.0 - be) / s**2))
        e2 = A * math.sqrt(d) * (1.0 + s**2 / (_PI * d) + be / r) * g
        e3 = 2.0 * _PI * A * s * d**2 * (
            (s**2 / d) * (1.0 - al)
            + (1.0 / (_PI * d)) * (2.0 + 1.0 / q)
            + (be / 2.0) * (1.0 - al + 1.0 / (_PI * s**2) + (1.0 + al) / q)
        ) * E(-_PI * s**2 * (1.0 - al) ** 2 / 4.0)
        e4 = d * A * (
            (_PI * d**2 / s**2 + d) * (1.0 + be) + 2.0 + 2.0 / r + al * (_PI * d + s**2 + _PI * be / r)
        ) * g
        e5 = 2.0 * math.sqrt(d) * A * g / r
        e6 = 2.0 * _PI * A * d**2 * s * (
            (1.0 - al) / 2.0 + 1.0 / (2.0 * _PI * s**2) + ((1.0 + al) / 2.0) / q
        ) * E(-_PI * s**2 * (1.0 - al) ** 2 / 4.0)
        e7 = 2.0 * _PI * d * A * (d / s**2 + 1.0 / _PI + al / r) * g
        e8 = _PI * d * A * ((d / s**2) * (1.0 - be) + 1.0 / _PI + al / (1.0 - E(-_PI * d * (1.0 - be) / s**2))) * E(
            -_PI * d**2 * (1.0 - be) ** 2 / (4.0 * s**2)
        )
    return {"eps1": e1, "eps2": e2, "eps3": e3, "eps4": e4, "eps5": e5, "eps6": e6, "eps7": e7, "eps8": e8}


def bound_commutator(p: ClockParams) -> BoundReport:
    """Bound on ``|| [t_c, H_c] psi - i psi ||_2`` for the centred-spectrum convention.

    The value does not depend on ``T0``.
    """
    terms = commutator_terms(p)
    d = p.d
    weights = {
        "eps8": 1.0,
        "eps7": 0.5,
        "eps6": 0.5,
        "eps5": 0.5 * _PI * d,
        "eps4": 1.0,
        "eps3": 1.0,
        "eps2": _PI * d,
        "eps1": _PI * d,
    }
    al, be = _alpha_beta_bar(p)
    terms = dict(terms, alpha_bar=al, beta_bar=be, A_upper=amplitude_upper(p))
    return _report("commutator", terms, weights, _regime(p), alpha_bar=al, beta_bar=be)


def gaussian_tail(a: float, X: float, Delta: float, moment: int) -> float:
    """Closed-form bound on ``sum_{n=a}^{inf} (n-X)**moment * exp(-(n-X)**2/Delta**2)``.

    The sum runs over ``n = a, a+1, ...``.  Domains: ``a > X`` (moment 0),
    ``a > X + Delta`` (moment 1), ``a > X + sqrt(2)*Delta`` (moment 2).
    """
    if Delta <= 0:
        raise ValueError("Delta must be positive")
    gap = a - X
    if moment == 0:
        if not gap > 0:
            raise ValueError("moment 0 requires a > X")
        return _EXP(-(gap**2) / Delta**2) / (1.0 - _EXP(-2.0 * gap / Delta**2))
    if moment == 1:
        if not gap > Delta:
            raise ValueError("moment 1 requires a > X + Delta")
        return (gap + Delta**2 / 2.0) * _EXP(-(gap**2) / Delta**2)
    if moment == 2:
        if not gap > math.sqrt(2.0) * Delta:
            raise ValueError("moment 2 requires a > X + sqrt(2)*Delta")
        return (gap**2 + (Delta**2 / 2.0) * (gap + 1.0 / (1.0 - _EXP(-2.0 * gap / Delta**2)))) * _EXP(
            -(gap**2) / Delta**2
        )
    raise ValueError("moment must be 0, 1 or 2")


def energy_basis_bound(d: int) -> float:
    """Deviation of symmetric-state energy amplitudes from the continuous transform."""
    return 2.0**2.25 / (1.0 - _EXP(-_PI)) * d**-0.25 * _EXP(-_PI * d / 4.0)


def unitary_error_chain(errors: Iterable[float]) -> float:
    """Errors of a product of unitaries acting on approximately tracked states add up."""
    errs = [float(e) for e in errors]
    if any(e < 0 for e in errs):
        raise ValueError("errors must be nonnegative")
    return math.fsum(errs)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from chronon.bounds import (
    Regime,
    amplitude_upper,
    bound_commutator,
    bound_epsilon_c,
    bound_epsilon_v,
    commutator_terms,
    eps_bar2_bound,
    eps_nor_bound,
    eps_nor_exact,
    gaussian_tail,
    normalization_bracket,
    normalization_errors,
    unitary_error_chain,
)
from chronon.clock_core import ClockParams, gaussian_state
from chronon.potentials import KAPPA, ConstantPotential, CosinePotential, decay_params
from chronon.propagator import EvolutionSpec, evolve_exact, evolve_free, reference_state


def _reports():
    p = ClockParams.symmetric(17, T0=2.0)
    g = ClockParams(d=24, sigma=3.1, n0=10.0, k0=0.4)
    pot = CosinePotential(60, 1.0)
    return [
        bound_epsilon_c(p, 0.7),
        bound_epsilon_c(g, -1.3),
        bound_epsilon_v(p, pot, 2.0),
        bound_epsilon_v(g, CosinePotential(3, 0.2), 0.5),
        bound_epsilon_v(ClockParams.symmetric(8), None, 1.0),
        bound_commutator(p),
        bound_commutator(ClockParams(d=21, sigma=3.0, n0=11.0, k0=1.0)),
    ]


@pytest.mark.parametrize("rep", _reports(), ids=lambda r: r.name)
def test_total_recombines_from_terms(rep):
    assert abs(rep.total - rep.recombine()) <= 1e-12 * max(1.0, rep.total)
    for k in rep.weights:
        assert rep.terms[k] >= 0 and math.isfinite(rep.terms[k])
    d = rep.to_dict()
    assert d["regime"] in {"sigma_sqrt_d", "general"}
    assert set(d["weights"]) <= set(d["terms"])


# ---------------------------------------------------------------- epsilon_c


def test_epsilon_c_at_zero_time():
    p = ClockParams.symmetric(16)
    rep = bound_epsilon_c(p, 0.0)
    assert rep.total == pytest.approx(rep.terms["eps_step"] + rep.terms["eps_nor"], rel=1e-15)
    assert rep.regime is Regime.SIGMA_SQRT_D


def test_epsilon_c_linear_in_time():
    p = ClockParams(d=20, sigma=3.0, n0=8.0)
    r1 = bound_epsilon_c(p, 0.4)
    r2 = bound_epsilon_c(p, 0.8)
    assert r2.terms["steps"] * r2.terms["eps_total"] == pytest.approx(2 * r1.terms["steps"] * r1.terms["eps_total"], rel=1e-15)
    assert r1.regime is Regime.GENERAL


@pytest.mark.parametrize("d", [8, 12, 16, 21])
def test_epsilon_c_dominates_measurement(d):
    p = ClockParams.symmetric(d, T0=1.5)
    s = gaussian_state(p)
    for t in np.linspace(0, p.T0, 9)[1:]:
        measured = np.linalg.norm(evolve_free(s, p, t).amps - reference_state(p, None, t).amps)
        assert measured <= bound_epsilon_c(p, t).total


def test_epsilon_c_decreases_with_d():
    totals = [bound_epsilon_c(ClockParams.symmetric(d), 1.0).total for d in (8, 16, 32, 64, 128)]
    assert all(b < a for a, b in zip(totals, totals[1:]))


def test_parameter_errors_rejected():
    with pytest.raises(ValueError):
        bound_epsilon_c(ClockParams(d=8, sigma=9.0), 0.1)


# ---------------------------------------------------------------- normalisation


def test_bracket_width_at_d32():
    lo, hi = normalization_bracket(ClockParams.symmetric(32))
    centre = 0.5 * (lo + hi)
    assert hi - lo < 1e-20 * centre or hi - lo == 0.0
    exact = oracles.normalisation_exact(32, math.sqrt(32), 0.0)
    assert exact == pytest.approx(math.sqrt(2) / math.sqrt(32), rel=1e-15)


def test_bracket_narrow_regime_dominated_by_aliasing():
    e1, e2 = normalization_errors(ClockParams(d=40, sigma=1.5))
    assert e2 > e1
    e1, e2 = normalization_errors(ClockParams(d=40, sigma=30.0))
    assert e1 > e2


def test_bracket_upper_is_infinite_when_error_swamps_centre():
    lo, hi = normalization_bracket(ClockParams(d=6, sigma=0.3))
    assert math.isinf(hi)
    assert lo <= oracles.normalisation_exact(6, 0.3, 0.0)


@settings(max_examples=80, deadline=None)
@given(
    d=st.integers(4, 200),
    frac=st.floats(0.05, 0.95),
    shift=st.floats(-60, 60),
    k0=st.floats(-2, 2),
)
def test_eps_nor_exact_within_closed_bound(d, frac, shift, k0):
    p = ClockParams(d=d, sigma=frac * d, k0=k0)
    assert eps_nor_exact(p, shift * p.T0 / d) <= eps_nor_bound(p) * (1 + 1e-12) + 1e-15


@pytest.mark.parametrize("d", [3, 4, 6, 8, 12])
def test_eps_nor_symmetric_closed_form_dominates(d):
    p = ClockParams.symmetric(d)
    worst = max(eps_nor_exact(p, s * p.T0 / d) for s in np.linspace(0, 1, 101))
    closed = 8 * math.sqrt(2 / d) * math.exp(-math.pi * d / 2) / (1 - math.exp(-math.pi * d))
    assert worst <= closed <= eps_nor_bound(p)


def test_eps_nor_narrow_state_counterexample():
    # the closed exponential form alone is beaten by the exact mismatch here
    p = ClockParams(d=46, sigma=2.875)
    exact = eps_nor_exact(p, 1.5 * p.T0 / p.d)
    closed = (4 * math.sqrt(2) / p.sigma) * (
        math.exp(-math.pi * p.d**2 / (2 * p.sigma**2)) / (1 - math.exp(-2 * math.pi * p.d / p.sigma**2))
        + math.exp(-math.pi * p.sigma**2 / 2) / (1 - math.exp(-math.pi * p.sigma**2))
    )
    assert exact > closed
    assert exact <= eps_nor_bound(p)


def test_amplitude_upper_is_conservative():
    for d in (5, 16, 33):
        p = ClockParams.symmetric(d, k0=0.3)
        assert amplitude_upper(p) ** 2 >= oracles.normalisation_exact(d, p.sigma, p.k0) * (1 - 1e-12)


# ---------------------------------------------------------------- epsilon_v


def test_epsilon_v_zero_potential_reduces_to_free_structure():
    p = ClockParams.symmetric(24)
    rv = bound_epsilon_v(p, None, 0.6)
    rc = bound_epsilon_c(p, 0.6)
    assert rv.valid and rv.info["upsilon_bar"] == 0.0
    assert rv.terms["eps_step"] == rc.terms["eps_step"]
    assert rv.terms["eps_nor"] == rc.terms["eps_nor"]
    assert rv.info["b"] == 0.0
    assert bound_epsilon_v(p, ConstantPotential(0.0), 0.6).total == rv.total


def test_polynomial_branch_formula():
    p = ClockParams.symmetric(8)
    b = 100.0
    val, branch, info = eps_bar2_bound(p, b)
    assert branch == "polynomial" and info["N_script"] < 8
    A = math.sqrt(normalization_bracket(p)[1])
    expect = (
        3**1.75 / (math.sqrt(2 * math.pi) * math.e)
        * A * (8 + math.pi**2)
        * (KAPPA * math.sqrt(6 * math.pi) / math.log(3) * b + math.sqrt(8)) ** 3
        * math.sqrt(8) / 8**3
    )
    assert val == pytest.approx(expect, rel=1e-13)


def test_exponential_branch_fires_for_large_d_and_small_b():
    p = ClockParams.symmetric(400)
    val, branch, info = eps_bar2_bound(p, 1.0)
    assert branch == "exponential" and info["N_script"] >= 8
    assert val < 1e-10


@pytest.mark.parametrize("t", [2.0, 10.0, 20.0])
def test_epsilon_v_dominates_on_figure_parameters(t):
    p = ClockParams.symmetric(20, T0=20.0)
    pot = CosinePotential(60, 1.0)
    out = evolve_exact(gaussian_state(p), EvolutionSpec(p, t, pot))
    measured = np.linalg.norm(out.amps - reference_state(p, pot, t).amps)
    rep = bound_epsilon_v(p, pot, t)
    assert rep.valid and measured <= rep.total


def test_epsilon_v_branch_boundary_still_dominates():
    # sweep b across the point where the rate count N_script drops below 8
    p = ClockParams.symmetric(64)
    branches = set()
    for b in np.linspace(0.1, 8.0, 25):
        _, branch, info = eps_bar2_bound(p, float(b))
        branches.add(branch)
    assert branches == {"exponential", "polynomial"}
    for n in (2, 8, 30):
        pot = CosinePotential(n, 1.0)
        rep = bound_epsilon_v(p, pot, 0.5)
        out = evolve_exact(gaussian_state(p), EvolutionSpec(p, 0.5, pot))
        assert np.linalg.norm(out.amps - reference_state(p, pot, 0.5).amps) <= rep.total


def test_epsilon_v_invalid_flag():
    p = ClockParams(d=10, sigma=0.5, n0=4.5)
    rep = bound_epsilon_v(p, CosinePotential(3), 0.2)
    assert not rep.valid and rep.info["branch"] == "polynomial"
    assert decay_params(CosinePotential(3), p).N_script is None


# ---------------------------------------------------------------- commutator


def test_commutator_requires_odd_dimension_and_small_offsets():
    with pytest.raises(ValueError):
        commutator_terms(ClockParams.symmetric(16))
    with pytest.raises(ValueError):
        commutator_terms(ClockParams(d=9, n0=7.9, k0=4.6))


def test_commutator_centred_symmetric_offsets_vanish():
    rep = bound_commutator(ClockParams.symmetric(17))
    assert rep.info["alpha_bar"] == 0.0 and rep.info["beta_bar"] == 0.0


@pytest.mark.parametrize(
    "d,sigma,n0,k0",
    [(17, None, None, 0.0), (9, None, None, 0.0), (33, None, None, 0.5), (25, 3.0, 13.0, 1.0), (41, 8.0, 18.0, -2.0)],
)
def test_commutator_bound_dominates_dense_measurement(d, sigma, n0, k0):
    p = ClockParams(d=d, T0=2.3, sigma=sigma, n0=n0, k0=k0)
    comm, psi = oracles.centred_commutator(d, p.T0, p.sigma, p.n0 - (d - 1) / 2, p.k0)
    measured = np.linalg.norm(comm @ psi - 1j * psi)
    assert measured <= bound_commutator(p).total * (1 + 1e-12)


def test_commutator_bound_independent_of_period():
    a = bound_commutator(ClockParams.symmetric(17, T0=1.0))
    b = bound_commutator(ClockParams.symmetric(17, T0=7.3))
    assert a.total == b.total


# ---------------------------------------------------------------- Gaussian tails


def test_gaussian_tail_against_brute_force_random():
    rng = np.random.default_rng(20240611)
    count = 0
    for moment in (0, 1, 2):
        for _ in range(70):
            Delta = rng.uniform(0.3, 12.0)
            X = rng.uniform(-20, 20)
            lead = {0: 0.0, 1: Delta, 2: math.sqrt(2) * Delta}[moment]
            a = math.floor(X + lead) + 1 + int(rng.integers(0, 8))
            brute = oracles.gaussian_tail_sum(a, X, Delta, moment)
            assert brute <= gaussian_tail(a, X, Delta, moment) * (1 + 1e-12)
            count += 1
    assert count >= 200


def test_gaussian_tail_vanishes_far_out_and_edge_of_domain():
    assert gaussian_tail(60, 0.0, 2.0, 0) < 1e-300
    val = gaussian_tail(3.0 + 1e-9, 0.0, 3.0, 1)
    assert math.isfinite(val) and val >= oracles.gaussian_tail_sum(4, 1e-9 - 1.0 + 1.0, 3.0, 1)
    for bad in [(0.0, 0.0, 1.0, 0), (1.0, 0.0, 1.0, 1), (1.4, 0.0, 1.0, 2), (5.0, 0.0, 1.0, 3), (5.0, 0.0, 0.0, 0)]:
        with pytest.raises(ValueError):
            gaussian_tail(*bad)


# ---------------------------------------------------------------- composition


def test_unitary_error_chain_examples():
    assert unitary_error_chain([0.1, 0.2]) == pytest.approx(0.3)
    assert unitary_error_chain([]) == 0.0
    with pytest.raises(ValueError):
        unitary_error_chain([0.1, -0.2])


def _random_unitary(rng, n, scale=1.0):
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.exp(1j * scale * w)) @ v.conj().T


@pytest.mark.parametrize("seed", range(5))
def test_unitary_error_chain_dominates_composition(seed):
    rng = np.random.default_rng(seed)
    n = 6
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi /= np.linalg.norm(psi)
    exact, approx = psi.copy(), psi.copy()
    errs = []
    for _ in range(7):
        U = _random_unitary(rng, n)
        V = U @ _random_unitary(rng, n, scale=0.01)
        # error of each step on the exactly tracked state
        errs.append(np.linalg.norm((U - V) @ exact))
        exact, approx = U @ exact, V @ approx
    assert np.linalg.norm(exact - approx) <= unitary_error_chain(errs) + 1e-14

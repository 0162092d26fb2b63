import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from chronon.bounds import bound_epsilon_v
from chronon.clock_core import Basis, ClockParams, ClockState, gaussian_state, theta_state, window
from chronon.potentials import ConstantPotential, CosinePotential
from chronon.propagator import (
    EigenCache,
    EvolutionSpec,
    Method,
    evolve,
    evolve_exact,
    evolve_free,
    evolve_split,
    reference_state,
    total_hamiltonian_theta,
)


def _dist(a: ClockState, b: ClockState) -> float:
    assert np.array_equal(a.window, b.window)
    return float(np.linalg.norm(a.amps - b.amps))


def test_spec_validation():
    p = ClockParams.symmetric(8)
    with pytest.raises(ValueError):
        EvolutionSpec(p, 1.0, method="split", steps=0)
    assert EvolutionSpec(p, 1.0, method="split").method is Method.SPLIT


# ---------------------------------------------------------------- free evolution


def test_free_identity_at_zero_and_period():
    p = ClockParams.symmetric(12, T0=2.5, k0=0.3)
    s = gaussian_state(p)
    assert _dist(evolve_free(s, p, 0.0), s) < 1e-14
    assert _dist(evolve_free(s, p, p.T0), s.relabel(window(p.d, p.k0 + p.d))) < 1e-12


def test_free_moves_time_eigenstates():
    d = 8
    p = ClockParams.symmetric(d)
    out = evolve_free(theta_state(d, 0), p, 3 * p.T0 / d, relabel=False)
    target = theta_state(d, 3).relabel(out.window)
    assert _dist(out, target) < 1e-13


@settings(max_examples=30, deadline=None)
@given(d=st.integers(3, 40), t=st.floats(-5, 5), T0=st.floats(0.3, 9.0))
def test_free_matches_dense_expm(d, t, T0):
    p = ClockParams.symmetric(d, T0=T0)
    s = gaussian_state(p)
    labels = s.window
    ref = oracles.evolve_expm(d, T0, s.amps, labels, t)
    out = evolve_free(s, p, t, relabel=False)
    assert np.allclose(out.amps, ref, atol=1e-10)
    assert abs(out.norm() - 1) < 1e-12


def test_free_composition():
    p = ClockParams.symmetric(16, T0=1.7)
    s = gaussian_state(p)
    a = evolve_free(evolve_free(s, p, 0.31), p.with_(k0=p.k0 + 0.31 * p.d / p.T0), 0.52)
    b = evolve_free(s, p, 0.83)
    assert _dist(a, b) < 1e-10


def test_free_requires_time_basis():
    p = ClockParams.symmetric(8)
    with pytest.raises(ValueError):
        evolve_free(gaussian_state(p).to_energy(), p, 0.1)


# ---------------------------------------------------------------- exact evolution


def test_exact_without_potential_equals_free():
    p = ClockParams.symmetric(10, T0=3.0)
    s = gaussian_state(p)
    for pot in (None, ConstantPotential(0.0)):
        a = evolve_exact(s, EvolutionSpec(p, 1.3, pot))
        b = evolve_free(s, p, 1.3)
        assert _dist(a, b) < 1e-11


def test_exact_matches_dense_expm_with_potential():
    p = ClockParams.symmetric(9, T0=2.0, k0=1.0)
    pot = CosinePotential(10, 0.8)
    s = gaussian_state(p)
    vdiag = (p.d / p.T0) * (2 * math.pi / p.d) * oracles.cosine_values(10, 0.8, math.pi, 2 * math.pi * np.mod(s.window, p.d) / p.d)
    ref = oracles.evolve_expm(p.d, p.T0, s.amps, s.window, 0.77, vdiag)
    out = evolve_exact(s, EvolutionSpec(p, 0.77, pot), relabel=False)
    assert np.allclose(out.amps, ref, atol=1e-11)


def test_exact_unitarity_large_d():
    p = ClockParams.symmetric(512)
    out = evolve_exact(gaussian_state(p), EvolutionSpec(p, 0.41, CosinePotential(30)))
    assert abs(out.norm() - 1) < 1e-11


def test_constant_potential_is_global_phase():
    p = ClockParams.symmetric(12)
    s = gaussian_state(p)
    out = evolve_exact(s, EvolutionSpec(p, p.T0, ConstantPotential(1.0)))
    free = evolve_free(s, p, p.T0)
    # V_d sums to omega over a period, so the phase after T0 is exp(-i omega)
    assert np.allclose(out.amps, np.exp(-1j) * free.amps, atol=1e-11)


def test_full_period_returns_up_to_global_phase():
    p = ClockParams.symmetric(20, T0=20.0)
    pot = CosinePotential(60, 1.0)
    s = gaussian_state(p)
    out = evolve_exact(s, EvolutionSpec(p, p.T0, pot)).relabel(s.window)
    overlap = np.vdot(np.exp(-1j) * s.amps, out.amps)
    eps = bound_epsilon_v(p, pot, p.T0).total
    assert abs(1 - abs(overlap)) <= eps


def test_exact_composition():
    p = ClockParams.symmetric(16)
    pot = CosinePotential(10, 1.0)
    s = gaussian_state(p)
    mid = evolve_exact(s, EvolutionSpec(p, 0.2, pot), relabel=False)
    a = evolve_exact(mid, EvolutionSpec(p, 0.35, pot), relabel=False)
    b = evolve_exact(s, EvolutionSpec(p, 0.55, pot), relabel=False)
    assert _dist(a, b) < 1e-10


# ---------------------------------------------------------------- split operator


def test_split_without_potential_equals_free_for_any_steps():
    p = ClockParams.symmetric(16)
    s = gaussian_state(p)
    free = evolve_free(s, p, 0.37)
    for m in (1, 3, 17):
        for strang in (True, False):
            out = evolve_split(s, EvolutionSpec(p, 0.37, None, "split", steps=m, strang=strang))
            assert _dist(out, free) < 1e-12


def test_split_converges_to_exact():
    p = ClockParams.symmetric(8)
    pot = CosinePotential(10, 1.0)
    s = gaussian_state(p)
    exact = evolve_exact(s, EvolutionSpec(p, p.T0 / 2, pot))
    split = evolve_split(s, EvolutionSpec(p, p.T0 / 2, pot, "split"))
    assert _dist(split, exact) < 1e-8
    fixed = evolve_split(s, EvolutionSpec(p, p.T0 / 2, pot, "split", steps=2**20))
    assert _dist(fixed, exact) < 1e-9


def test_lie_error_is_first_order():
    p = ClockParams.symmetric(16)
    pot = CosinePotential(10, 1.0)
    s = gaussian_state(p)
    exact = evolve_exact(s, EvolutionSpec(p, 0.5, pot))
    errs = [_dist(evolve_split(s, EvolutionSpec(p, 0.5, pot, "split", steps=m, strang=False)), exact) for m in (64, 128, 256, 512)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(1.7 <= r <= 2.3 for r in ratios)


def test_strang_error_is_second_order():
    p = ClockParams.symmetric(16)
    pot = CosinePotential(10, 1.0)
    s = gaussian_state(p)
    exact = evolve_exact(s, EvolutionSpec(p, 0.5, pot))
    e1 = _dist(evolve_split(s, EvolutionSpec(p, 0.5, pot, "split", steps=64)), exact)
    e2 = _dist(evolve_split(s, EvolutionSpec(p, 0.5, pot, "split", steps=128)), exact)
    assert 3.4 <= e1 / e2 <= 4.6


def test_split_step_budget_exhausted():
    from chronon.propagator import ConvergenceError

    p = ClockParams.symmetric(16)
    spec = EvolutionSpec(p, 0.5, CosinePotential(60, 1.0), "split", tol=1e-14)
    with pytest.raises(ConvergenceError):
        evolve_split(gaussian_state(p), spec, max_steps=8)


def test_split_unitarity_and_dispatch():
    p = ClockParams.symmetric(32)
    pot = CosinePotential(60, 1.0)
    s = gaussian_state(p)
    spec = EvolutionSpec(p, 0.8, pot, "split", steps=7)
    out = evolve(s, spec)
    assert abs(out.norm() - 1) < 1e-11
    assert _dist(out, evolve_split(s, spec)) == 0.0
    assert _dist(evolve(s, EvolutionSpec(p, 0.8, pot)), evolve_exact(s, EvolutionSpec(p, 0.8, pot))) == 0.0


# ---------------------------------------------------------------- reference state


def test_reference_state_trivial_cases():
    p = ClockParams.symmetric(14, k0=0.6)
    s = gaussian_state(p)
    r = reference_state(p, CosinePotential(5), 0.0)
    assert _dist(r, s) < 1e-14
    shifted = reference_state(p, None, 0.3)
    plain = gaussian_state(p.with_(k0=p.k0 + 0.3 * p.d / p.T0))
    assert _dist(shifted, plain) < 1e-14
    assert reference_state(p, ConstantPotential(0.0), 0.3).amps.tolist() == shifted.amps.tolist()


def test_reference_state_within_bound_on_figure_parameters():
    p = ClockParams.symmetric(20, T0=20.0)
    pot = CosinePotential(60, 1.0)
    s = gaussian_state(p)
    out = evolve_exact(s, EvolutionSpec(p, 10.0, pot))
    ref = reference_state(p, pot, 10.0)
    err = _dist(out, ref)
    bound = bound_epsilon_v(p, pot, 10.0)
    assert bound.valid
    assert err <= bound.total
    # pointwise form on the window follows from the 2-norm
    assert np.max(np.abs(out.amps - ref.amps)) <= bound.total


def test_reference_state_is_normalised():
    p = ClockParams(d=24, sigma=3.0, n0=9.0, k0=-1.2)
    r = reference_state(p, CosinePotential(12, -0.5), 2.3, delta0=0.4)
    assert r.basis is Basis.TIME
    assert abs(r.norm() - 1) < 1e-12


# ---------------------------------------------------------------- cache


def test_eigen_cache_lru_and_hits():
    cache = EigenCache(capacity=2)
    p = ClockParams.symmetric(8)
    pots = [CosinePotential(n) for n in (1, 2, 3)]
    for pot in pots:
        cache.get(p, pot)
    assert len(cache) == 2 and cache.misses == 3
    cache.get(p, pots[2])
    assert cache.hits == 1
    cache.get(p, pots[0])
    assert cache.misses == 4
    w, v = cache.get(p, pots[0], coupling=0.5)
    h = total_hamiltonian_theta(p, pots[0], np.arange(8), 0.5)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-10)
    cache.clear()
    assert len(cache) == 0 and cache.hits == 0


def test_eigen_cache_concurrent_use():
    from concurrent.futures import ThreadPoolExecutor

    cache = EigenCache(capacity=4)
    p = ClockParams.symmetric(16)
    pot = CosinePotential(10)
    with ThreadPoolExecutor(4) as pool:
        results = list(pool.map(lambda _: cache.get(p, pot)[0], range(16)))
    assert all(np.array_equal(r, results[0]) for r in results)
    assert len(cache) == 1

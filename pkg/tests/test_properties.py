"""Randomized properties over small schemes (hypothesis)."""
from fractions import Fraction

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from mbsp import (IndexSets, build_folded_system, build_scheme, design_window, fold_samples,
                  plan_block, reconstruct_block, solve_coefficients)
from mbsp.music import DataMatrix, music_spectrum

moduli_st = st.lists(st.integers(2, 20), min_size=1, max_size=4, unique=True)
settings.register_profile("mbsp", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("mbsp")


@st.composite
def solvable_case(draw):
    moduli = draw(moduli_st)
    n_inst = build_scheme(moduli).n_instants
    size = draw(st.integers(1, min(40, n_inst)))
    J = draw(st.lists(st.integers(-60, 60), min_size=size, max_size=size, unique=True))
    system = build_folded_system(moduli, J)
    assume(system.rank_ok)
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return moduli, system, np.random.default_rng(seed)


@given(moduli_st)
def test_dedup_count(moduli):
    s = build_scheme(moduli)
    assert s.n_instants == len({Fraction(q, Q) for Q in moduli for q in range(Q)})
    assert sorted(np.concatenate(s.grid_map).tolist()) == sorted(
        s.grid_map[k][q] for k, Q in enumerate(moduli) for q in range(Q))


@given(solvable_case(), st.fractions(-3, 3, max_denominator=50))
def test_round_trip(case, t0):
    moduli, system, rng = case
    scheme = build_scheme(moduli, t0=float(t0))
    beta = rng.standard_normal(len(system.cols)) + 1j * rng.standard_normal(len(system.cols))
    x = np.exp(2j * np.pi * np.outer(scheme.instants, system.cols)) @ beta
    got = solve_coefficients(system, fold_samples(scheme, x), t0=float(t0), t0_over_T=t0).beta_p
    assert np.allclose(got, beta, atol=1e-9 * max(1.0, np.abs(beta).max()))


@given(solvable_case())
def test_folded_equals_dense_least_squares(case):
    moduli, system, rng = case
    scheme = build_scheme(moduli)
    x = rng.standard_normal(scheme.n_instants) + 1j * rng.standard_normal(scheme.n_instants)
    got = solve_coefficients(system, fold_samples(scheme, x)).beta_p
    t = np.concatenate([np.arange(Q) / Q for Q in moduli])
    y = np.concatenate([x[m] for m in scheme.grid_map])
    want = np.linalg.lstsq(np.exp(2j * np.pi * np.outer(t, system.cols)), y, rcond=None)[0]
    assert np.allclose(got, want, atol=1e-9)


@given(st.fractions(-20, 20, max_denominator=10 ** 6), moduli_st)
def test_plan_relative_interval(tau, moduli):
    plan = plan_block(build_scheme(moduli), tau)
    assert all(Fraction(-1, 2) <= r < Fraction(1, 2) for r in plan.exact_rel())


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4))
def test_components_sum_to_z(seed, n_comp):
    rng = np.random.default_rng(seed)
    scheme = build_scheme([13, 15, 17])
    window = design_window(4.0, 1.0, 0.5)
    edges = np.sort(rng.choice(np.arange(-20, 20), 2 * n_comp, replace=False))
    sets = IndexSets.from_runs(list(zip(edges[::2], edges[1::2])))
    system = build_folded_system(scheme, sets.union)
    assume(system.rank_ok)
    plan = plan_block(scheme, float(rng.uniform(-2, 2)))
    x = rng.standard_normal(scheme.n_instants) + 1j * rng.standard_normal(scheme.n_instants)
    res = reconstruct_block(plan, system, window, x, plan.tau + np.linspace(-0.25, 0.25, 9), sets)
    assert np.allclose(sum(res.components.values()), res.z, rtol=0, atol=1e-12 * np.abs(res.z).max())


@given(st.integers(0, 2 ** 32 - 1), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_chi_bounds_and_scale(seed, c):
    rng = np.random.default_rng(seed)
    N, H = 30, 40
    t = np.sort(rng.choice(300, N, replace=False)) / 300 - 0.5
    A = rng.standard_normal((N, H)) + 1j * rng.standard_normal((N, H))
    P = int(rng.integers(0, N))
    a = music_spectrum(DataMatrix(A, t, 1.0, (0, 99)), P).spectrum
    b = music_spectrum(DataMatrix(c * A, t, 1.0, (0, 99)), P).spectrum
    assert np.all(a >= 1 - 1e-9)
    assert np.allclose(a, b, rtol=1e-6)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uldplab.models import (
    DriftSpec,
    FiniteSDE,
    GalerkinSPDE,
    NoiseSpec,
    PerturbedBM,
    SwappedBM,
    TranslatedBM,
    _drift_apply,
    _noise_apply,
    _noise_block,
    constant_control,
    convolutions,
    load_model,
    model_from_spec,
    model_to_spec,
    sample_noise,
    simulate_batch,
    sine_control,
    skeleton,
    solve_controlled,
)
from uldplab.pathspace import DiscretePath, TimeGrid


GRID = TimeGrid(1.0, 64)


def test_noise_increments_have_step_variance():
    grid = TimeGrid(1.0, 32)
    inc = _noise_block(grid, 2, 7, 0, 4000)
    assert inc.shape == (4000, 32, 2)
    assert np.mean(inc) == pytest.approx(0.0, abs=5e-3)
    assert np.var(inc) == pytest.approx(grid.dt, rel=0.05)


def test_sample_noise_is_a_size_one_block():
    grid = TimeGrid(1.0, 16)
    for k in (0, 4, 9):
        draw = sample_noise(grid, 3, 99, k)
        assert np.array_equal(draw.increments, _noise_block(grid, 3, 99, k, 1)[0])


def test_sample_noise_differs_across_indices_and_seeds():
    grid = TimeGrid(1.0, 16)
    a = sample_noise(grid, 1, 5, 0).increments
    b = sample_noise(grid, 1, 5, 1).increments
    c = sample_noise(grid, 1, 6, 0).increments
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_translated_bm_core_is_start_independent():
    # paths from different starts share bit-identical fluctuations
    inc = _noise_block(GRID, 1, 3, 0, 8)
    a = simulate_batch(TranslatedBM(), GRID, np.array([0.0]), 0.1, None, inc)
    b = simulate_batch(TranslatedBM(), GRID, np.array([1e6]), 0.1, None, inc)
    # start is added last, so the x path is the bitwise translate of the 0 path
    assert np.array_equal(b, a + 1e6)


def test_translated_bm_control_adds_running_integral():
    u = constant_control(GRID, 2.0)
    path = solve_controlled(TranslatedBM(), GRID, np.array([1.0]), 0.0, u)
    expect = 1.0 + 2.0 * GRID.times
    assert np.allclose(path.values[:, 0], expect, rtol=0, atol=1e-14)


def test_perturbed_bm_start_leak():
    x = np.array([100.0])
    for eps in (0.1, 0.01):
        p = solve_controlled(PerturbedBM(), GRID, x, eps, None, sample_noise(GRID, 1, 1, 0))
        q = solve_controlled(TranslatedBM(), GRID, x, eps, None, sample_noise(GRID, 1, 1, 0))
        assert p.values[0, 0] == pytest.approx((1 + eps) * 100.0)
        # same fluctuations, shifted by the start leak eps*x
        assert np.allclose(p.values - q.values, eps * 100.0, atol=1e-9)


def test_swapped_bm_swaps_only_the_designated_start():
    noise = sample_noise(GRID, 1, 4, 2)
    plain = solve_controlled(TranslatedBM(), GRID, np.array([0.25]), 0.2, None, noise)
    same = solve_controlled(SwappedBM(), GRID, np.array([0.25]), 0.2, None, noise)
    assert np.array_equal(same.values, plain.values)
    swapped = solve_controlled(SwappedBM(), GRID, np.array([0.0]), 0.2, None, noise)
    shifted = solve_controlled(TranslatedBM(), GRID, np.array([0.5]), 0.2, None, noise)
    assert np.array_equal(swapped.values, shifted.values)


def test_skeleton_is_zero_noise_limit():
    u = sine_control(GRID, 2)
    sk = skeleton(TranslatedBM(), GRID, np.array([0.5]), u)
    inc = np.zeros((1, GRID.steps, 1))
    direct = simulate_batch(TranslatedBM(), GRID, np.array([0.5]), 0.0, u, inc)[0]
    assert np.array_equal(sk.values, direct)


def test_finite_sde_zero_drift_identity_noise_is_bm():
    dim = 3
    model = FiniteSDE(dim=dim, drift=DriftSpec("zero"), noise=NoiseSpec("identity"))
    grid = TimeGrid(1.0, 32)
    inc = _noise_block(grid, dim, 11, 0, 5)
    eps = 0.09
    paths = simulate_batch(model, grid, np.zeros(dim), eps, None, inc)
    expect = math.sqrt(eps) * np.cumsum(inc, axis=1)
    assert np.allclose(paths[:, 1:, :], expect, rtol=0, atol=1e-12)


def test_finite_sde_linear_drift_matches_euler_recursion():
    dim = 2
    model = FiniteSDE(
        dim=dim,
        drift=DriftSpec("linear", matrix=((-1.0, 0.5), (0.0, -2.0))),
        noise=NoiseSpec("identity"),
    )
    grid = TimeGrid(0.5, 16)
    inc = _noise_block(grid, dim, 2, 0, 1)
    eps = 0.04
    got = simulate_batch(model, grid, np.array([1.0, -1.0]), eps, None, inc)[0]
    A = np.array([[-1.0, 0.5], [0.0, -2.0]])
    state = np.array([1.0, -1.0])
    for i in range(grid.steps):
        state = state + A @ state * grid.dt + math.sqrt(eps) * inc[0, i]
        assert np.allclose(got[i + 1], state, rtol=0, atol=1e-12)


def test_galerkin_zero_noise_decays_like_semigroup():
    model = GalerkinSPDE(modes=3, channels=3, drift=DriftSpec("zero"))
    grid = TimeGrid(0.5, 64)
    x = np.array([1.0, 1.0, 1.0])
    sk = skeleton(model, grid, x)
    lam = model.eigenvalues()
    expect = np.exp(-np.outer(grid.times, lam))
    assert np.allclose(sk.values, expect, rtol=1e-12, atol=1e-12)


def test_galerkin_convolutions_match_direct_sums():
    model = GalerkinSPDE(modes=4, channels=4)
    grid = TimeGrid(0.5, 16)
    # freeze an arbitrary path so the test pins the definition, not the scheme
    frozen = DiscretePath(grid, np.random.default_rng(5).normal(size=(17, 4)))
    noise = sample_noise(grid, 4, 21, 0)
    u = constant_control(grid, 0.3, 4)
    parts = convolutions(model, grid, frozen, control=u, noise=noise)
    a = model.eigenvalues()
    dt = grid.dt
    for j in (1, 7, 16):
        g = np.zeros(4)
        l = np.zeros(4)
        th = np.zeros(4)
        for i in range(j):
            w = np.exp(-a * (grid.times[j] - grid.times[i + 1]))
            state = frozen.values[i][None, :]
            g += w * _noise_apply(model.noise, state, noise.increments[i][None, :])[0]
            l += w * _noise_apply(model.noise, state, u.values[i][None, :])[0] * dt
            th += w * _drift_apply(model.drift, state)[0] * dt
        assert np.allclose(parts["gamma"].values[j], g, rtol=1e-11, atol=1e-13)
        assert np.allclose(parts["lambda"].values[j], l, rtol=1e-11, atol=1e-13)
        assert np.allclose(parts["theta"].values[j], th, rtol=1e-11, atol=1e-13)


def test_hilbert_space_weighting_orders_modes():
    model = GalerkinSPDE(modes=6, channels=6)
    lam = model.eigenvalues()
    assert np.all(np.diff(lam) > 0)
    assert model.hs_bound(0.25) > 0


def test_control_energy_and_ball():
    u = constant_control(GRID, 1.0)
    assert u.squared_l2 == pytest.approx(1.0)
    assert u.energy == pytest.approx(0.5)
    assert u.in_ball(1.0)
    assert not u.in_ball(0.99)


def test_sine_control_needs_resolvable_frequency():
    with pytest.raises(ValueError):
        sine_control(TimeGrid(1.0, 16), 5)


def test_sine_control_running_integral_is_exact():
    grid = TimeGrid(1.0, 64)
    n = 4
    u = sine_control(grid, n)
    w = n * math.pi / grid.horizon
    running = np.concatenate([[0.0], np.cumsum(u.values[:, 0]) * grid.dt])
    expect = (1.0 - np.cos(w * grid.times)) / w
    assert np.allclose(running, expect, rtol=0, atol=1e-13)


def test_model_spec_round_trip():
    for model in (
        TranslatedBM(),
        PerturbedBM(),
        SwappedBM(swap_at=0.0, swap_to=0.5),
        FiniteSDE(dim=2, drift=DriftSpec("zero"), noise=NoiseSpec("identity")),
        GalerkinSPDE(modes=3, channels=3),
    ):
        spec = model_to_spec(model)
        again = model_from_spec(spec)
        assert model_to_spec(again) == spec


def test_load_model_builtin_and_file(tmp_path):
    import json

    assert isinstance(load_model("translated-bm"), TranslatedBM)
    f = tmp_path / "m.json"
    f.write_text(json.dumps(model_to_spec(SwappedBM())))
    m = load_model(str(f))
    assert isinstance(m, SwappedBM)


def test_eps_zero_requires_no_noise_but_eps_positive_does():
    with pytest.raises(ValueError):
        solve_controlled(TranslatedBM(), GRID, np.array([0.0]), 0.5, None, None)
    p = solve_controlled(TranslatedBM(), GRID, np.array([0.0]), 0.0, None, None)
    assert np.all(p.values == 0.0)


@given(st.floats(min_value=0.0, max_value=0.5), st.integers(min_value=0, max_value=50))
@settings(max_examples=40, deadline=None)
def test_noise_scaling_is_sqrt_eps_exact(eps, idx):
    # one shared draw: fluctuation part scales exactly like sqrt(eps)
    inc = _noise_block(GRID, 1, 13, 0, 51)[idx : idx + 1]
    base = simulate_batch(TranslatedBM(), GRID, np.array([0.0]), 1.0, None, inc)
    scaled = simulate_batch(TranslatedBM(), GRID, np.array([0.0]), eps, None, inc)
    assert np.allclose(scaled, math.sqrt(eps) * base, rtol=1e-12, atol=1e-12)


@given(st.integers(min_value=1, max_value=6))
@settings(max_examples=20, deadline=None)
def test_noise_gains_respect_bounded_tag(decay_tenths):
    spec = NoiseSpec("diagonal-bounded", gain=0.5, decay=decay_tenths / 10.0)
    gains = spec.gains(8)
    assert spec.growth == "bounded"
    assert np.all(gains <= 0.5 + 1e-12)
    assert np.all(np.diff(gains) <= 1e-12)

import json
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
    SwappedBM,
    TranslatedBM,
    constant_control,
    sine_control,
    skeleton,
)
from uldplab.pathspace import DiscretePath, TimeGrid, line_path
from uldplab.rates import (
    constant_slope_controls,
    export_level_set,
    inf_h_plus_I,
    rate_closed_form,
    rate_variational,
    sample_level_set,
)


GRID = TimeGrid(1.0, 64)


def test_line_rate_is_half():
    path = line_path(GRID, 0.0, 1.0)
    r = rate_closed_form(TranslatedBM(), GRID, 0.0, path)
    assert r.value == 0.5
    assert r.finite
    assert np.all(r.control.values == 1.0)


def test_rate_infinite_on_start_mismatch():
    path = line_path(GRID, 1.0, 2.0)
    r = rate_closed_form(TranslatedBM(), GRID, 0.0, path)
    assert r.value == math.inf
    assert r.control is None
    v = rate_variational(TranslatedBM(), GRID, 0.0, path)
    assert v.value == math.inf


def test_closed_form_rejects_state_dependent_models():
    model = FiniteSDE(dim=1, drift=DriftSpec("zero"), noise=NoiseSpec("identity"))
    with pytest.raises(TypeError):
        rate_closed_form(model, GRID, 0.0, line_path(GRID, 0.0, 1.0))


def test_rate_is_translation_invariant():
    gen = np.random.default_rng(3)
    values = np.cumsum(np.concatenate([[0.4], gen.normal(0, 0.05, GRID.steps)]))
    path = DiscretePath(GRID, values[:, None])
    shifted = path.translate(7.25)
    a = rate_closed_form(TranslatedBM(), GRID, 0.4, path)
    b = rate_closed_form(TranslatedBM(), GRID, 0.4 + 7.25, shifted)
    assert b.value == pytest.approx(a.value, rel=1e-12)


def test_swapped_model_rates_against_swapped_start():
    model = SwappedBM()
    from_zero = line_path(GRID, 0.0, 1.0)
    from_half = line_path(GRID, 0.5, 0.5)
    assert rate_closed_form(model, GRID, 0.0, from_zero).value == math.inf
    r = rate_closed_form(model, GRID, 0.0, from_half)
    assert r.finite
    assert r.value == pytest.approx(0.5 * 0.5 * 0.5)


def test_variational_recovers_generator_energy_on_spectral_model():
    model = GalerkinSPDE(modes=3, channels=3)
    grid = TimeGrid(0.5, 32)
    u = constant_control(grid, (0.4, -0.2, 0.1))
    x = np.array([1.0, 0.0, -1.0])
    phi = skeleton(model, grid, x, u)
    r = rate_variational(model, grid, x, phi)
    assert r.finite
    assert r.value == pytest.approx(u.energy, rel=1e-9)


def test_variational_flags_unreachable_path():
    model = GalerkinSPDE(modes=2, channels=2, noise=NoiseSpec("zero"))
    grid = TimeGrid(0.5, 16)
    rising = DiscretePath(grid, np.column_stack([grid.times, grid.times]))
    # zero diffusion cannot produce a rising path
    r = rate_variational(model, grid, np.zeros(2), rising)
    assert r.value == math.inf


def test_dual_routes_agree_on_translated_family():
    gen = np.random.default_rng(11)
    for k in range(5):
        values = np.cumsum(np.concatenate([[0.0], gen.normal(0, 0.1, GRID.steps)]))
        path = DiscretePath(GRID, values[:, None])
        a = rate_closed_form(TranslatedBM(), GRID, 0.0, path)
        b = rate_variational(TranslatedBM(), GRID, 0.0, path)
        assert b.value == pytest.approx(a.value, rel=1e-10)


@given(st.integers(min_value=1, max_value=4), st.floats(min_value=-2.0, max_value=2.0))
@settings(max_examples=30, deadline=None)
def test_dual_routes_agree_on_sine_skeletons(n, x0):
    u = sine_control(GRID, n)
    phi = skeleton(TranslatedBM(), GRID, x0, u)
    a = rate_closed_form(TranslatedBM(), GRID, x0, phi)
    b = rate_variational(TranslatedBM(), GRID, x0, phi)
    assert math.isfinite(a.value)
    assert b.value == pytest.approx(a.value, rel=1e-10, abs=1e-12)
    # recovered energy never beats the generator
    assert a.value <= u.energy + 1e-10


def test_level_set_members_stay_under_level():
    sample = sample_level_set(TranslatedBM(), GRID, 0.0, 1.5, 40, seed=9)
    assert len(sample) == 40
    assert sample.energies[0] == 0.0
    assert np.all(sample.controls[0].values == 0.0)
    for c, e in zip(sample.controls, sample.energies):
        assert e <= 1.5 + 1e-12
        assert c.energy == pytest.approx(e, rel=1e-12, abs=1e-15)


def test_level_zero_degenerates_to_noise_free_path():
    sample = sample_level_set(TranslatedBM(), GRID, 0.3, 0.0, 12, seed=1)
    assert len(sample) == 1
    assert np.all(sample.paths.members[0].values == 0.3)


def test_level_set_controls_do_not_depend_on_start():
    a = sample_level_set(TranslatedBM(), GRID, 0.0, 1.0, 8, seed=5)
    b = sample_level_set(TranslatedBM(), GRID, 2.0, 1.0, 8, seed=5)
    for ca, cb in zip(a.controls, b.controls):
        assert np.array_equal(ca.values, cb.values)
    # so the members differ by the translation flow alone
    for pa, pb in zip(a.paths.members, b.paths.members):
        assert np.array_equal(pb.values, pa.values + 2.0)


def test_constant_pool_hits_prescribed_energies():
    pool = constant_slope_controls(GRID, 1, 2.0, 16)
    assert len(pool) == 32
    energies = sorted({round(c.energy, 12) for c in pool})
    assert energies == pytest.approx([0.125 * j for j in range(1, 17)], rel=1e-12)


class _FlatCost:
    """Functional h = c outside a target line, 0 on it; bound c."""

    def __init__(self, c, target):
        self.c = c
        self.target = target

    def bound(self):
        return self.c

    def __call__(self, path):
        from uldplab.pathspace import sup_metric

        return 0.0 if sup_metric(path, self.target) < 1e-9 else self.c


def test_inf_h_plus_I_zero_cost_picks_zero_control():
    h = _FlatCost(0.0, line_path(GRID, 0.0, 0.0))
    val, arg = inf_h_plus_I(TranslatedBM(), GRID, 0.0, h, s_max=1.0, count=32, seed=2)
    assert val == 0.0
    assert np.all(arg.values == 0.0)


def test_inf_h_plus_I_requires_wide_enough_search():
    h = _FlatCost(1.1, line_path(GRID, 0.0, 1.0))
    with pytest.raises(ValueError):
        inf_h_plus_I(TranslatedBM(), GRID, 0.0, h, s_max=2.0, count=8, seed=2)


def test_inf_h_plus_I_finds_line_witness_through_constant_pool():
    # paying c off the line: optimum is the line itself at energy 1/2
    h = _FlatCost(5.0, line_path(GRID, 0.0, 1.0))
    val, arg = inf_h_plus_I(
        TranslatedBM(), GRID, 0.0, h, s_max=10.0, count=16, seed=4, constant_pool=40
    )
    assert val == pytest.approx(0.5, abs=1e-9)
    assert np.allclose(arg.values[:, 0], GRID.times, atol=1e-9)


def test_export_level_set_round_trip(tmp_path):
    sample = sample_level_set(TranslatedBM(), GRID, 0.0, 1.0, 4, seed=8)
    manifest_path = export_level_set(sample, str(tmp_path / "ls"))
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    assert manifest["s"] == 1.0
    assert manifest["count"] == 4
    assert manifest["seed"] == 8
    assert len(manifest["paths"]) == 4
    back = DiscretePath.from_csv(str(tmp_path / "ls" / manifest["paths"][2]))
    assert np.allclose(back.values, sample.paths.members[2].values, atol=1e-15)

"""Binary swarm: transfer machinery and full runs."""

import math

import numpy as np
import pytest

from idcopt.bpso import (
    BpsoParams,
    position_update,
    run_bpso,
    transfer_factor,
    transfer_function,
    velocity_update,
)
from idcopt.core import BudgetMeter, EvaluationCache
from idcopt.objectives import ConstantObjective, OneMaxObjective


# ------------------------------------------------------------ transfer factor


def test_transfer_factor_schedule():
    assert transfer_factor(1, 2.0, 1.0) == 1.0
    assert transfer_factor(2, 2.0, 1.0) == 1.5
    assert transfer_factor(10 ** 9, 2.0, 1.0) == pytest.approx(2.0, abs=1e-8)


def test_transfer_factor_strictly_increasing_and_bounded():
    values = [transfer_factor(i, 2.0, 1.0) for i in range(1, 200)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert all(1.0 <= v < 2.0 for v in values)


def test_transfer_factor_rejects_zero_iteration():
    with pytest.raises(ValueError):
        transfer_factor(0)


# ---------------------------------------------------------- transfer function


def test_transfer_function_zero_velocity():
    assert transfer_function(0.0, 1.0) == 0.0


def test_transfer_function_reference_value():
    assert transfer_function(1.0, 1.0) == pytest.approx(0.462117, abs=1e-6)


def test_transfer_function_symmetric():
    v = np.linspace(-8, 8, 101)
    assert np.allclose(transfer_function(v, 1.7), transfer_function(-v, 1.7))


def test_transfer_function_range_and_monotone_in_magnitude():
    grid = np.linspace(0.0, 50.0, 1000)
    for a in (0.5, 1.0, 2.0):
        tf = transfer_function(grid, a)
        assert np.all(tf >= 0.0) and np.all(tf < 1.0)
        assert np.all(np.diff(tf) >= -1e-12)


# ------------------------------------------------------------ velocity update


def test_velocity_update_keeps_inertia_when_converged():
    params = BpsoParams()
    v = np.array([0.5, -0.25])
    x = np.array([1, 0], dtype=np.uint8)
    out = velocity_update(v, x, x, x, params, np.ones(2), np.ones(2))
    assert np.allclose(out, params.inertia * v)


def test_velocity_update_arithmetic():
    params = BpsoParams()
    out = velocity_update(
        np.zeros(3), np.zeros(3, dtype=np.uint8),
        np.ones(3, dtype=np.uint8), np.ones(3, dtype=np.uint8),
        params, np.ones(3), np.ones(3),
    )
    assert np.allclose(out, 4.0)


def test_velocity_update_annihilation():
    params = BpsoParams(inertia=0.0, cognitive=0.0, social=0.0)
    out = velocity_update(
        np.full(4, 3.0), np.zeros(4, dtype=np.uint8),
        np.ones(4, dtype=np.uint8), np.ones(4, dtype=np.uint8),
        params, np.full(4, 0.5), np.full(4, 0.5),
    )
    assert np.allclose(out, 0.0)


def test_velocity_update_clamps():
    params = BpsoParams(velocity_clamp=2.0)
    out = velocity_update(
        np.zeros(2), np.zeros(2, dtype=np.uint8),
        np.ones(2, dtype=np.uint8), np.ones(2, dtype=np.uint8),
        params, np.ones(2), np.ones(2),
    )
    assert np.allclose(out, 2.0)


# ------------------------------------------------------------ position update


def test_position_update_identity_at_zero_probability():
    x = np.array([0, 1, 1, 0], dtype=np.uint8)
    out = position_update(x, np.zeros(4), np.random.default_rng(0).random(4))
    assert np.array_equal(out, x)


def test_position_update_flips_both_ways():
    x = np.array([0, 1], dtype=np.uint8)
    out = position_update(x, np.ones(2), np.full(2, 0.5))
    assert out.tolist() == [1, 0]


# --------------------------------------------------------------------- runs


def test_run_constant_objective_never_improves():
    rec = run_bpso(ConstantObjective(dim=16, value=3.0),
                   BpsoParams(n_particles=5, max_iter=10), seed=1)
    costs = [e.best_cost for e in rec.entries]
    assert costs == [3.0] * 11


def test_run_same_seed_identical_records():
    obj = OneMaxObjective(24)
    params = BpsoParams(n_particles=8, max_iter=12)
    a = run_bpso(obj, params, seed=9, cache=EvaluationCache())
    b = run_bpso(obj, params, seed=9, cache=EvaluationCache())
    assert [(e.iteration, e.evaluations, e.best_cost) for e in a.entries] == \
           [(e.iteration, e.evaluations, e.best_cost) for e in b.entries]
    assert np.array_equal(a.best_bits, b.best_bits)
    assert a.best_cost == b.best_cost


def test_run_budget_ceiling():
    obj = OneMaxObjective(16)
    params = BpsoParams(n_particles=7, max_iter=9)
    meter = BudgetMeter()
    run_bpso(obj, params, seed=2, meter=meter)
    assert meter.evaluations_used <= 7 * (9 + 1)


def test_run_budget_exhaustion_is_clean():
    obj = OneMaxObjective(16)
    meter = BudgetMeter(40)
    rec = run_bpso(obj, BpsoParams(n_particles=10, max_iter=50), seed=3, meter=meter)
    assert meter.evaluations_used == 40
    assert rec.best_bits is not None
    costs = [e.best_cost for e in rec.entries]
    assert costs == sorted(costs, reverse=True)


def test_run_finds_small_onemax_optimum():
    # empirical check against the known optimum of the 8-bit instance
    obj = OneMaxObjective(8)
    hits = sum(
        run_bpso(obj, seed=s, cache=EvaluationCache()).best_cost == 0.0
        for s in range(1, 21)
    )
    assert hits >= 19


def test_run_global_best_monotone():
    rec = run_bpso(OneMaxObjective(32), BpsoParams(n_particles=6, max_iter=20), seed=4)
    costs = [e.best_cost for e in rec.entries]
    assert all(a >= b for a, b in zip(costs, costs[1:]))
    assert rec.best_cost == costs[-1]
    assert math.isfinite(rec.wall_time)


def test_params_validation():
    with pytest.raises(ValueError):
        BpsoParams(n_particles=0)
    with pytest.raises(ValueError):
        BpsoParams(tf_max=1.0, tf_min=1.0)

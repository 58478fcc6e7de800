"""Core contracts: genome encoding, grid expansion, metered evaluation,
seeded streams, and run traces."""

import math

import numpy as np
import pytest

from idcopt.core import (
    ANTISYM,
    FULL_GRID,
    MIRROR,
    REDUCED_GRID,
    BudgetExhausted,
    BudgetMeter,
    EncodingError,
    EvaluationCache,
    GridShape,
    RngStream,
    RunRecord,
    as_bits,
    binarize,
    bits_key,
    evaluate,
    expand_genome,
    parse_bits,
    swarm_diversity,
)
from idcopt.objectives import ConstantObjective, OneMaxObjective


# ------------------------------------------------------------------ genomes


def test_bits_key_round_trip():
    bits = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    key = bits_key(bits)
    assert key == "10110"
    assert np.array_equal(parse_bits(key), bits)
    assert np.array_equal(parse_bits(key + "\n"), bits)


def test_as_bits_rejects_bad_input():
    with pytest.raises(EncodingError):
        as_bits([0, 1, 2])
    with pytest.raises(EncodingError):
        as_bits([[0, 1], [1, 0]])
    with pytest.raises(EncodingError):
        as_bits([0, 1], dim=3)
    with pytest.raises(EncodingError):
        parse_bits("01x")


def test_grid_shape_free_cells():
    assert FULL_GRID.free_rows == 6
    assert FULL_GRID.free_cells == 96
    assert REDUCED_GRID.free_cells == 8
    with pytest.raises(ValueError):
        GridShape(rows=4, cols=4)


def test_expand_all_ones_is_symmetric_under_both_maps():
    ones = np.ones(96, dtype=np.uint8)
    for sym in (MIRROR, ANTISYM):
        assert expand_genome(ones, sym).all()


def test_expand_single_bit_mirror():
    g = np.zeros(96, dtype=np.uint8)
    g[0] = 1
    grid = expand_genome(g, MIRROR)
    assert grid[0, 0] == 1 and grid[10, 0] == 1
    assert grid.sum() == 2


def test_expand_single_bit_antisym():
    g = np.zeros(96, dtype=np.uint8)
    g[0] = 1
    grid = expand_genome(g, ANTISYM)
    assert grid[0, 0] == 1 and grid[10, 15] == 1
    assert grid.sum() == 2


def test_expand_length_mismatch():
    with pytest.raises(EncodingError):
        expand_genome(np.zeros(95, dtype=np.uint8), MIRROR)


@pytest.mark.parametrize("shape", [FULL_GRID, REDUCED_GRID])
@pytest.mark.parametrize("sym", [MIRROR, ANTISYM])
def test_expansion_symmetry_holds_for_random_genomes(shape, sym):
    rng = RngStream(123, f"expand/{shape.rows}x{shape.cols}/{sym}")
    for _ in range(1000):
        grid = expand_genome(rng.coin_flips(shape.free_cells), sym, shape)
        for r in range(shape.rows // 2):
            image = grid[r] if sym == MIRROR else grid[r][::-1]
            assert np.array_equal(grid[shape.rows - 1 - r], image)


def test_expansion_round_trips_so_distinct_genomes_stay_distinct():
    rng = RngStream(7, "expand/roundtrip")
    for _ in range(1000):
        bits = rng.coin_flips(96)
        grid = expand_genome(bits, MIRROR)
        assert np.array_equal(grid[: FULL_GRID.free_rows].ravel(), bits)


# ------------------------------------------------------- evaluation plumbing


def test_evaluate_caches_and_meters():
    obj = OneMaxObjective(8)
    cache, meter = EvaluationCache(), BudgetMeter(10)
    bits = np.ones(8, dtype=np.uint8)
    assert evaluate(obj, bits, cache, meter) == 0.0
    assert meter.evaluations_used == 1
    assert evaluate(obj, bits, cache, meter) == 0.0
    assert meter.evaluations_used == 1
    assert meter.cache_hits == 1
    assert len(cache) == 1


def test_evaluate_budget_exhaustion_only_on_miss():
    obj = OneMaxObjective(4)
    cache, meter = EvaluationCache(), BudgetMeter(1)
    cached = np.ones(4, dtype=np.uint8)
    evaluate(obj, cached, cache, meter)
    # cached genome still answers with a spent budget
    assert evaluate(obj, cached, cache, meter) == 0.0
    with pytest.raises(BudgetExhausted):
        evaluate(obj, np.zeros(4, dtype=np.uint8), cache, meter)
    assert meter.evaluations_used == 1


def test_evaluate_same_cost_on_every_call():
    obj = OneMaxObjective(16)
    cache, meter = EvaluationCache(), BudgetMeter()
    rng = RngStream(3, "cache/soundness")
    genomes = [rng.coin_flips(16) for _ in range(50)]
    first = [evaluate(obj, g, cache, meter) for g in genomes]
    again = [evaluate(obj, g, cache, meter) for g in genomes]
    assert first == again


def test_evaluate_rejects_invalid_costs():
    class Broken(ConstantObjective):
        def cost(self, bits):
            return -1.0

    with pytest.raises(ValueError):
        evaluate(Broken(dim=4), np.zeros(4, dtype=np.uint8))


def test_meter_never_exceeds_ceiling():
    meter = BudgetMeter(3)
    for _ in range(3):
        meter.charge()
    with pytest.raises(BudgetExhausted):
        meter.charge()
    assert meter.evaluations_used == 3
    assert meter.remaining == 0


def test_unlimited_meter():
    meter = BudgetMeter()
    for _ in range(100):
        meter.charge()
    assert meter.remaining == math.inf


# -------------------------------------------------------------- rng streams


def test_rng_same_seed_same_draws():
    a = RngStream(42, "x").random(100)
    b = RngStream(42, "x").random(100)
    assert np.array_equal(a, b)


def test_rng_labels_isolate_streams():
    root = RngStream(42)
    a = root.spawn("velocity").random(10)
    b = root.spawn("position").random(10)
    assert not np.array_equal(a, b)
    # drawing from one child never shifts the other
    c = RngStream(42, "root/position").random(10)
    assert np.array_equal(b, c)


def test_rng_counts_draws():
    rng = RngStream(1, "count")
    rng.random(10)
    rng.random()
    rng.integers(0, 5, size=(2, 3))
    assert rng.draws == 17


def test_rng_rejects_negative_seed():
    with pytest.raises(ValueError):
        RngStream(-1)


# -------------------------------------------------------------- run records


def test_run_record_enforces_monotone_best():
    rec = RunRecord("x", 0)
    rec.log(0, 5, 10.0)
    rec.log(1, 10, 10.0)
    rec.log(2, 15, 8.5)
    with pytest.raises(ValueError):
        rec.log(3, 20, 9.0)


# ---------------------------------------------------------------- diversity


def test_diversity_zero_when_collapsed():
    pos = np.ones((5, 96))
    assert swarm_diversity(pos, np.ones(96)) == 0.0


def test_diversity_one_at_full_hamming_distance():
    pos = np.ones((1, 96))
    assert swarm_diversity(pos, np.zeros(96)) == pytest.approx(1.0)


def test_diversity_is_the_mean():
    best = np.zeros(4)
    near = np.zeros(4)
    far = np.ones(4)   # normalized distance exactly 1
    assert swarm_diversity(np.stack([near, far]), best) == pytest.approx(0.5)


def test_diversity_rejects_empty_swarm():
    with pytest.raises(ValueError):
        swarm_diversity(np.empty((0, 4)), np.zeros(4))


def test_binarize_threshold():
    out = binarize(np.array([0.0, 0.49, 0.5, 0.51, 1.0]))
    assert out.tolist() == [0, 0, 1, 1, 1]

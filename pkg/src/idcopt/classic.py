"""Simulated annealing, bee colony, ant colony, and antlion optimizers,
all sharing the metered-objective and seeded-stream contracts."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetExhausted,
    BudgetMeter,
    RngStream,
    RunRecord,
    binarize,
    evaluate,
)

# ---------------------------------------------------------------- annealing


@dataclass
class SaSchedule:
    """Geometric cooling schedule.

    With t_initial unset, the run calibrates it as 10x the median absolute
    cost difference over `calibration_pairs` random (genome, neighbor) pairs
    sampled up front; t_final then defaults to 1e-3 * t_initial.
    """

    max_iter: int = 100
    cooling: float = 0.95
    t_initial: float | None = None
    t_final: float | None = None
    mutation: str = "random"   # "random" flips one bit, "swap" exchanges a 1 and a 0
    calibration_pairs: int = 20

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling rate must lie in (0, 1)")
        if self.mutation not in ("random", "swap"):
            raise ValueError(f"mutation must be 'random' or 'swap', got {self.mutation!r}")
        if self.t_initial is not None and self.t_final is not None:
            if not self.t_initial > self.t_final > 0:
                raise ValueError("need t_initial > t_final > 0")


def sa_random_mutation(bits, rng: RngStream) -> np.ndarray:
    """Flip one uniformly chosen bit."""
    out = np.array(bits, dtype=np.uint8)
    out[int(rng.integers(0, out.size))] ^= 1
    return out


def sa_swap_mutation(bits, rng: RngStream) -> np.ndarray:
    """Exchange a uniformly chosen 1 with a uniformly chosen 0, preserving
    the ones count; constant genomes fall back to a single random flip."""
    out = np.array(bits, dtype=np.uint8)
    ones = np.flatnonzero(out == 1)
    zeros = np.flatnonzero(out == 0)
    if len(ones) == 0 or len(zeros) == 0:
        return sa_random_mutation(out, rng)
    out[ones[int(rng.integers(0, len(ones)))]] = 0
    out[zeros[int(rng.integers(0, len(zeros)))]] = 1
    return out


def sa_accept(delta: float, temperature: float) -> float:
    """Probability of accepting a cost increase `delta` at temperature T:
    1 for delta <= 0, else exp(-delta/T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if delta <= 0:
        return 1.0
    return math.exp(-delta / temperature)


def run_sa(objective, schedule: SaSchedule | None = None, seed: int = 0,
           meter: BudgetMeter | None = None, cache=None) -> RunRecord:
    """Single-solution annealing; tracks the best-so-far genome separately
    from the current one, so the record stays monotone even while worse
    moves are accepted."""
    schedule = schedule or SaSchedule()
    meter = meter if meter is not None else BudgetMeter()
    init = RngStream(seed, "sa/init")
    move = RngStream(seed, "sa/move")
    calib = RngStream(seed, "sa/calibrate")
    mutate = sa_random_mutation if schedule.mutation == "random" else sa_swap_mutation
    record = RunRecord("sa", seed)
    start = time.perf_counter()
    dim = objective.dim

    best_bits = None
    best_cost = math.inf
    exhausted = False
    temperature = t_end = None
    current = None
    current_cost = math.inf
    try:
        current = init.coin_flips(dim)
        current_cost = evaluate(objective, current, cache, meter)
        best_bits, best_cost = current, current_cost
        t0 = schedule.t_initial
        if t0 is None:
            deltas = []
            for _ in range(schedule.calibration_pairs):
                g = calib.coin_flips(dim)
                base = evaluate(objective, g, cache, meter)
                neighbor = evaluate(objective, mutate(g, calib), cache, meter)
                deltas.append(abs(neighbor - base))
            t0 = 10.0 * float(np.median(deltas)) if deltas else 1.0
            if t0 <= 0:
                t0 = 1.0   # constant landscape: any positive temperature works
        t_end = schedule.t_final if schedule.t_final is not None else 1e-3 * t0
        temperature = t0
    except BudgetExhausted:
        exhausted = True

    if best_bits is not None:
        record.log(0, meter.evaluations_used, best_cost)

    if not exhausted:
        for it in range(1, schedule.max_iter + 1):
            try:
                neighbor = mutate(current, move)
                neighbor_cost = evaluate(objective, neighbor, cache, meter)
            except BudgetExhausted:
                break
            delta = neighbor_cost - current_cost
            if delta < 0 or move.random() < sa_accept(delta, temperature):
                current, current_cost = neighbor, neighbor_cost
            if neighbor_cost < best_cost:
                best_bits, best_cost = neighbor, neighbor_cost
            temperature = max(temperature * schedule.cooling, t_end)
            record.log(it, meter.evaluations_used, best_cost)

    record.best_bits = best_bits
    record.best_cost = best_cost
    record.wall_time = time.perf_counter() - start
    return record


# ---------------------------------------------------------------- bee colony


@dataclass
class AbcConfig:
    """Colony roles and the abandonment limit.

    Food sources map one-to-one onto employed bees; onlookers re-exploit
    sources picked by roulette; any source whose trial counter reaches
    `limit` is re-randomized by a scout.  scout_fraction records the nominal
    scout share of the colony and is informational only: the scout phase
    rescues every exhausted source.
    """

    total_bees: int = 30
    employed: int = 22
    onlooker: int = 5
    scout_fraction: float = 0.03
    limit: int = 50
    max_iter: int = 25

    def __post_init__(self):
        if self.employed < 1 or self.onlooker < 0:
            raise ValueError("need at least one employed bee and non-negative onlookers")
        if self.employed + self.onlooker > self.total_bees:
            raise ValueError("employed + onlooker bees exceed the colony size")
        if self.limit < 1 or self.max_iter < 1:
            raise ValueError("limit and max_iter must be at least 1")
        if not 0.0 <= self.scout_fraction <= 1.0:
            raise ValueError("scout_fraction must lie in [0, 1]")


def abc_selection_probs(costs) -> np.ndarray:
    """Roulette weights from fitness 1/(1 + cost); always sums to one."""
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        raise ValueError("no food sources to select from")
    fitness = 1.0 / (1.0 + c)
    return fitness / fitness.sum()


def _roulette(probs, rng: RngStream) -> int:
    cum = np.cumsum(probs)
    return int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), len(cum) - 1))


def run_abc(objective, config: AbcConfig | None = None, seed: int = 0,
            meter: BudgetMeter | None = None, cache=None) -> RunRecord:
    config = config or AbcConfig()
    meter = meter if meter is not None else BudgetMeter()
    init = RngStream(seed, "abc/init")
    move = RngStream(seed, "abc/move")
    record = RunRecord("abc", seed)
    start = time.perf_counter()
    dim = objective.dim
    nsrc = config.employed

    sources = (init.random((nsrc, dim)) < 0.5).astype(np.uint8)
    costs = np.full(nsrc, math.inf)
    trials = np.zeros(nsrc, dtype=int)
    best_bits = None
    best_cost = math.inf

    exhausted = False
    try:
        for s in range(nsrc):
            costs[s] = evaluate(objective, sources[s], cache, meter)
            if costs[s] < best_cost:
                best_cost, best_bits = costs[s], sources[s].copy()
    except BudgetExhausted:
        exhausted = True
    if best_bits is not None:
        record.log(0, meter.evaluations_used, best_cost)

    if not exhausted:
        for it in range(1, config.max_iter + 1):
            used_before = meter.evaluations_used
            try:
                for s in range(nsrc):   # employed phase: greedy one-bit probes
                    neighbor = sa_random_mutation(sources[s], move)
                    c = evaluate(objective, neighbor, cache, meter)
                    if c < costs[s]:
                        sources[s], costs[s], trials[s] = neighbor, c, 0
                    else:
                        trials[s] += 1
                    if c < best_cost:
                        best_cost, best_bits = c, neighbor.copy()

                probs = abc_selection_probs(costs)
                for _ in range(config.onlooker):   # onlooker phase
                    s = _roulette(probs, move)
                    neighbor = sa_random_mutation(sources[s], move)
                    c = evaluate(objective, neighbor, cache, meter)
                    if c < costs[s]:
                        sources[s], costs[s], trials[s] = neighbor, c, 0
                    else:
                        trials[s] += 1
                    if c < best_cost:
                        best_cost, best_bits = c, neighbor.copy()

                for s in range(nsrc):   # scout phase: abandon exhausted sources
                    if trials[s] >= config.limit:
                        sources[s] = move.coin_flips(dim)
                        costs[s] = evaluate(objective, sources[s], cache, meter)
                        trials[s] = 0
                        if costs[s] < best_cost:
                            best_cost, best_bits = costs[s], sources[s].copy()
            except BudgetExhausted:
                exhausted = True
            if not exhausted or meter.evaluations_used > used_before:
                record.log(it, meter.evaluations_used, best_cost)
            if exhausted:
                break

    record.best_bits = best_bits
    record.best_cost = best_cost
    record.wall_time = time.perf_counter() - start
    return record


# ---------------------------------------------------------------- ant colony


@dataclass
class AcoParams:
    n_ants: int = 25
    max_iter: int = 25
    evaporation: float = 0.1
    deposit: float = 1.0
    elitist_weight: float = 1.0
    tau_min: float = 0.01
    tau_max: float = 10.0
    tau_init: float = 1.0

    def __post_init__(self):
        if self.n_ants < 1 or self.max_iter < 1:
            raise ValueError("n_ants and max_iter must be at least 1")
        if not 0.0 < self.evaporation < 1.0:
            raise ValueError("evaporation rate must lie in (0, 1)")
        if not 0 < self.tau_min <= self.tau_init <= self.tau_max:
            raise ValueError("need 0 < tau_min <= tau_init <= tau_max")


class PheromoneTable:
    """Per-dimension desirability of each bit value, clamped to fixed bounds
    after every update so construction probabilities stay in (0, 1)."""

    def __init__(self, dim: int, params: AcoParams | None = None):
        params = params or AcoParams()
        self.tau = np.full((dim, 2), params.tau_init, dtype=float)
        self.evaporation = params.evaporation
        self.deposit = params.deposit
        self.elitist_weight = params.elitist_weight
        self.tau_min = params.tau_min
        self.tau_max = params.tau_max


def aco_construct(table: PheromoneTable, rng: RngStream) -> np.ndarray:
    """Sample a genome: bit d is 1 with probability tau[d,1]/(tau[d,0]+tau[d,1]).
    Heuristic desirability is uniform for this problem, so pheromone alone
    drives construction."""
    p_one = table.tau[:, 1] / table.tau.sum(axis=1)
    return (rng.random(table.tau.shape[0]) < p_one).astype(np.uint8)


def aco_deposit(table: PheromoneTable, solutions, costs, best_bits=None,
                best_cost: float = math.inf):
    """Evaporate, deposit amount/(1 + cost) along each solution's entries,
    add the elitist deposit along the best genome, then clamp."""
    table.tau *= 1.0 - table.evaporation
    idx = np.arange(table.tau.shape[0])
    for bits, cost in zip(solutions, costs):
        table.tau[idx, np.asarray(bits, dtype=np.intp)] += table.deposit / (1.0 + cost)
    if best_bits is not None:
        amount = table.elitist_weight * table.deposit / (1.0 + best_cost)
        table.tau[idx, np.asarray(best_bits, dtype=np.intp)] += amount
    np.clip(table.tau, table.tau_min, table.tau_max, out=table.tau)


def run_aco(objective, params: AcoParams | None = None, seed: int = 0,
            meter: BudgetMeter | None = None, cache=None) -> RunRecord:
    params = params or AcoParams()
    meter = meter if meter is not None else BudgetMeter()
    init = RngStream(seed, "aco/init")
    construct = RngStream(seed, "aco/construct")
    record = RunRecord("aco", seed)
    start = time.perf_counter()
    dim = objective.dim
    table = PheromoneTable(dim, params)

    best_bits = None
    best_cost = math.inf
    exhausted = False
    try:
        for _ in range(params.n_ants):
            ant = init.coin_flips(dim)
            c = evaluate(objective, ant, cache, meter)
            if c < best_cost:
                best_cost, best_bits = c, ant
    except BudgetExhausted:
        exhausted = True
    if best_bits is not None:
        record.log(0, meter.evaluations_used, best_cost)

    if not exhausted:
        for it in range(1, params.max_iter + 1):
            used_before = meter.evaluations_used
            solutions = []
            costs = []
            try:
                for _ in range(params.n_ants):
                    ant = aco_construct(table, construct)
                    c = evaluate(objective, ant, cache, meter)
                    solutions.append(ant)
                    costs.append(c)
                    if c < best_cost:
                        best_cost, best_bits = c, ant
            except BudgetExhausted:
                exhausted = True
            if solutions:
                aco_deposit(table, solutions, costs, best_bits, best_cost)
            if not exhausted or meter.evaluations_used > used_before:
                record.log(it, meter.evaluations_used, best_cost)
            if exhausted:
                break

    record.best_bits = best_bits
    record.best_cost = best_cost
    record.wall_time = time.perf_counter() - start
    return record


# ---------------------------------------------------------------- antlion


@dataclass
class AloParams:
    n_antlions: int = 25
    max_iter: int = 25
    walk_steps: int | None = None   # defaults to max_iter

    def __post_init__(self):
        if self.n_antlions < 1 or self.max_iter < 1:
            raise ValueError("n_antlions and max_iter must be at least 1")
        if self.walk_steps is not None and self.walk_steps < 1:
            raise ValueError("walk_steps must be at least 1")


def _normalized_walks(steps: int, dims: int, rng: RngStream) -> np.ndarray:
    """(steps, dims) cumulative +/-1 walks, min-max normalized per column."""
    moves = np.where(rng.random((steps, dims)) < 0.5, -1.0, 1.0)
    walk = np.cumsum(moves, axis=0)
    lo = walk.min(axis=0)
    span = walk.max(axis=0) - lo
    out = np.full_like(walk, 0.5)
    live = span > 0
    out[:, live] = (walk[:, live] - lo[live]) / span[live]
    return out


def alo_random_walk(steps: int, rng: RngStream) -> np.ndarray:
    """Cumulative sum of `steps` fair +/-1 steps, min-max normalized into
    [0, 1]; a constant walk maps to 0.5."""
    if steps < 1:
        raise ValueError("walk needs at least one step")
    return _normalized_walks(steps, 1, rng)[:, 0]


def alo_roulette(costs, rng: RngStream) -> int:
    """Pick an index with probability proportional to fitness 1/(1 + cost)."""
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        raise ValueError("no candidates to select from")
    return _roulette(1.0 / (1.0 + c), rng)


def boundary_shrink_ratio(iteration: int, max_iter: int) -> float:
    """Trap-boundary shrink factor: 1 early on, then 10^w * (t/maxIter) with
    w stepping 2,3,4,5,6 past iteration fractions 0.1, 0.5, 0.75, 0.9, 0.95."""
    frac = iteration / max_iter
    if frac <= 0.1:
        return 1.0
    w = 2 + (frac > 0.5) + (frac > 0.75) + (frac > 0.9) + (frac > 0.95)
    return 10.0 ** w * frac


def run_alo(objective, params: AloParams | None = None, seed: int = 0,
            meter: BudgetMeter | None = None, cache=None) -> RunRecord:
    """Continuous antlion search in the unit cube, thresholded for
    evaluation; each ant walks around a roulette-picked antlion and around
    the elite, inside boundaries that shrink as iterations pass."""
    params = params or AloParams()
    meter = meter if meter is not None else BudgetMeter()
    init = RngStream(seed, "alo/init")
    move = RngStream(seed, "alo/move")
    record = RunRecord("alo", seed)
    start = time.perf_counter()
    dim = objective.dim
    n = params.n_antlions
    steps = params.walk_steps or params.max_iter

    antlions = init.random((n, dim))
    costs = np.full(n, math.inf)
    exhausted = False
    evaluated = 0
    try:
        for i in range(n):
            costs[i] = evaluate(objective, binarize(antlions[i]), cache, meter)
            evaluated += 1
    except BudgetExhausted:
        exhausted = True
    antlions = antlions[:evaluated]
    costs = costs[:evaluated]

    best_bits = None
    best_cost = math.inf
    elite = None
    if evaluated:
        order = np.argsort(costs, kind="stable")
        antlions, costs = antlions[order], costs[order]
        elite = antlions[0].copy()
        best_cost = float(costs[0])
        best_bits = binarize(elite)
        record.log(0, meter.evaluations_used, best_cost)

    if not exhausted:
        for it in range(1, params.max_iter + 1):
            ratio = boundary_shrink_ratio(it, params.max_iter)
            walk_at = min(it - 1, steps - 1)
            used_before = meter.evaluations_used
            ants = np.empty((n, dim))
            ant_costs = np.empty(n)
            done = 0
            for i in range(n):
                picked = alo_roulette(costs, move)
                around_pick = antlions[picked] + (_normalized_walks(steps, dim, move)[walk_at] - 0.5) / ratio
                around_elite = elite + (_normalized_walks(steps, dim, move)[walk_at] - 0.5) / ratio
                ants[i] = 0.5 * (np.clip(around_pick, 0.0, 1.0) + np.clip(around_elite, 0.0, 1.0))
            try:
                for i in range(n):
                    ant_costs[i] = evaluate(objective, binarize(ants[i]), cache, meter)
                    done += 1
            except BudgetExhausted:
                exhausted = True
            if done:
                merged = np.vstack([antlions, ants[:done]])
                merged_costs = np.concatenate([costs, ant_costs[:done]])
                order = np.argsort(merged_costs, kind="stable")[: len(antlions)]
                antlions, costs = merged[order], merged_costs[order]
                if costs[0] < best_cost:
                    elite = antlions[0].copy()
                    best_cost = float(costs[0])
                    best_bits = binarize(elite)
                antlions[0] = elite   # keep the elite in the population
                costs[0] = best_cost
            if not exhausted or meter.evaluations_used > used_before:
                record.log(it, meter.evaluations_used, best_cost)
            if exhausted:
                break

    record.best_bits = best_bits
    record.best_cost = best_cost
    record.wall_time = time.perf_counter() - start
    return record

"""Binary particle swarm with a V-shaped velocity transfer function whose
steepness rises over iterations, and a flip-based position rule."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import BudgetExhausted, BudgetMeter, RngStream, RunRecord, evaluate


@dataclass
class BpsoParams:
    """Swarm defaults sized for the 96-bit sensor problem.

    tf_max / tf_min bound the iteration-varying transfer factor; the
    velocity clamp keeps the transfer function out of permanent saturation
    and can be disabled with None.
    """

    n_particles: int = 25
    max_iter: int = 25
    inertia: float = 1.0
    cognitive: float = 2.0
    social: float = 2.0
    tf_max: float = 2.0
    tf_min: float = 1.0
    velocity_clamp: float | None = 6.0

    def __post_init__(self):
        if self.n_particles < 1 or self.max_iter < 1:
            raise ValueError("n_particles and max_iter must be at least 1")
        if not self.tf_max > self.tf_min > 0:
            raise ValueError("transfer factor bounds need tf_max > tf_min > 0")


def transfer_factor(iteration: int, tf_max: float = 2.0, tf_min: float = 1.0) -> float:
    """Steepness a = tf_max - (tf_max - tf_min)/i, rising from tf_min toward
    tf_max as the 1-based iteration index grows."""
    if iteration < 1:
        raise ValueError("iteration index is 1-based")
    return tf_max - (tf_max - tf_min) / iteration


def transfer_function(velocity, steepness: float):
    """V-shaped flip probability 2/(1 + exp(-a*v)) - 1 for v > 0 and its
    mirror 1 - 2/(1 + exp(-a*v)) for v <= 0.

    Both branches equal 2/(1 + exp(-a*|v|)) - 1, which is the form computed
    here: symmetric in v, zero at v = 0, saturating toward 1 as |v| grows.
    """
    v = np.abs(np.asarray(velocity, dtype=float))
    return 2.0 / (1.0 + np.exp(-steepness * v)) - 1.0


def velocity_update(velocity, position, personal_best, global_best, params: BpsoParams, r1, r2):
    """v' = w*v + c1*r1*(p - x) + c2*r2*(g - x), optionally clamped."""
    x = np.asarray(position, dtype=float)
    v = (
        params.inertia * np.asarray(velocity, dtype=float)
        + params.cognitive * np.asarray(r1) * (personal_best - x)
        + params.social * np.asarray(r2) * (global_best - x)
    )
    if params.velocity_clamp is not None:
        v = np.clip(v, -params.velocity_clamp, params.velocity_clamp)
    return v


def position_update(position, flip_probability, r):
    """Flip each bit whose transfer value exceeds its uniform draw; keep the
    rest."""
    pos = np.asarray(position, dtype=np.uint8)
    flip = np.asarray(flip_probability) > np.asarray(r)
    return np.where(flip, 1 - pos, pos).astype(np.uint8)


def run_bpso(objective, params: BpsoParams | None = None, seed: int = 0,
             meter: BudgetMeter | None = None, cache=None) -> RunRecord:
    """Run the swarm against `objective`.

    Stops at max_iter or when the budget meter runs dry, whichever comes
    first; budget exhaustion is a clean early termination.  With the same
    seed, params, and objective the returned RunRecord is identical.
    """
    params = params or BpsoParams()
    meter = meter if meter is not None else BudgetMeter()
    init = RngStream(seed, "bpso/init")
    move = RngStream(seed, "bpso/move")
    record = RunRecord("bpso", seed)
    start = time.perf_counter()

    n, dim = params.n_particles, objective.dim
    positions = (init.random((n, dim)) < 0.5).astype(np.uint8)
    velocities = init.uniform(-1.0, 1.0, (n, dim))
    pbest = positions.copy()
    pcost = np.full(n, math.inf)
    best_bits = None
    best_cost = math.inf

    exhausted = False
    try:
        for i in range(n):
            c = evaluate(objective, positions[i], cache, meter)
            pcost[i] = c
            if c < best_cost:
                best_cost, best_bits = c, positions[i].copy()
    except BudgetExhausted:
        exhausted = True
    if best_bits is not None:
        record.log(0, meter.evaluations_used, best_cost)

    if not exhausted:
        for it in range(1, params.max_iter + 1):
            steepness = transfer_factor(it, params.tf_max, params.tf_min)
            used_before = meter.evaluations_used
            try:
                for i in range(n):
                    r1 = move.random(dim)
                    r2 = move.random(dim)
                    velocities[i] = velocity_update(
                        velocities[i], positions[i], pbest[i], best_bits, params, r1, r2
                    )
                    flip = transfer_function(velocities[i], steepness)
                    positions[i] = position_update(positions[i], flip, move.random(dim))
                    c = evaluate(objective, positions[i], cache, meter)
                    if c < pcost[i]:
                        pcost[i] = c
                        pbest[i] = positions[i]
                    if c < best_cost:
                        best_cost = c
                        best_bits = positions[i].copy()
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

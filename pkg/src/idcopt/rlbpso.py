"""Swarm optimizer whose control coefficients are steered per particle
group by a small actor-critic agent trained online.

The agent observes three normalized features (iteration fraction, swarm
diversity, global-best stagnation fraction) and emits (w, c1, c2, c3, c4)
for each particle group: inertia, three acceleration coefficients toward an
exemplar best / the global best / the particle's own best, and a restart
gain.  Particles move in the continuous unit cube, are thresholded at 0.5
for evaluation, and restart with probability c4 * 0.01 when stagnant.  The
critic is trained by one-step temporal difference, the actor by the
deterministic policy gradient through the critic; both networks are small
fixed-topology MLPs with hand-rolled backprop, so there is no framework
dependency and runs stay bit-reproducible.
"""

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
    swarm_diversity,
)

STATE_DIM = 3
PARAMS_PER_GROUP = 5   # (w, c1, c2, c3, c4)


@dataclass
class RlBpsoParams:
    n_particles: int = 25
    max_iter: int = 25
    n_groups: int = 5
    velocity_clamp: float = 6.0
    inertia_range: tuple = (0.4, 1.0)
    accel_range: tuple = (0.5, 2.5)     # bounds for c1, c2 and c3
    restart_range: tuple = (0.0, 1.0)   # bounds for c4
    hidden_units: int = 16
    actor_lr: float = 1e-3
    critic_lr: float = 1e-2
    discount: float = 0.9
    noise_start: float = 0.1
    noise_end: float = 0.01
    replay_capacity: int = 256
    batch_size: int = 16
    exemplar_prob: float = 0.3          # per-dimension tournament probability
    exemplar_refresh_after: int = 7     # pbest stagnation before the teacher map refreshes
    flag_after: int = 5                 # pbest stagnation before the restart flag raises
    # Diagnostics: a fixed (w, c1, c2, c3, c4) applied to every group, which
    # bypasses the agent entirely. Used to check the plain-PSO reduction.
    action_override: tuple | None = None
    warm_start: str | None = None       # weight snapshot to load before running

    def __post_init__(self):
        if self.n_particles < 1 or self.max_iter < 1 or self.n_groups < 1:
            raise ValueError("n_particles, max_iter and n_groups must be at least 1")
        if self.action_override is not None and len(self.action_override) != PARAMS_PER_GROUP:
            raise ValueError("action_override needs exactly (w, c1, c2, c3, c4)")


def action_bounds(params: RlBpsoParams):
    """Per-entry (low, high) vectors for the flattened group action."""
    low = np.tile(
        [params.inertia_range[0], params.accel_range[0], params.accel_range[0],
         params.accel_range[0], params.restart_range[0]],
        params.n_groups,
    )
    high = np.tile(
        [params.inertia_range[1], params.accel_range[1], params.accel_range[1],
         params.accel_range[1], params.restart_range[1]],
        params.n_groups,
    )
    return low.astype(float), high.astype(float)


def state_features(positions, best_position, iteration: int, max_iter: int,
                   stagnation_count: int) -> np.ndarray:
    """Normalized observation (iteration fraction, swarm diversity,
    stagnation fraction), each clipped into [0, 1]."""
    feats = np.array([
        iteration / max_iter,
        swarm_diversity(positions, best_position),
        stagnation_count / max_iter,
    ])
    return np.clip(feats, 0.0, 1.0)


def reward(previous_best: float, new_best: float) -> float:
    """Relative improvement of the global best; a flat -0.01 when the
    incumbent survives (or when it is already at zero cost)."""
    if previous_best > 0 and new_best < previous_best:
        return (previous_best - new_best) / previous_best
    return -0.01


def rl_velocity_update(velocity, position, exemplar_best, global_best, own_best,
                       inertia, c1, c2, c3, r1, r2, r3, clamp=None):
    """v' = w*v + c1*r1*(exemplar - x) + c2*r2*(g - x) + c3*r3*(p - x)."""
    x = np.asarray(position, dtype=float)
    v = (
        inertia * np.asarray(velocity, dtype=float)
        + c1 * np.asarray(r1) * (exemplar_best - x)
        + c2 * np.asarray(r2) * (global_best - x)
        + c3 * np.asarray(r3) * (own_best - x)
    )
    if clamp is not None:
        v = np.clip(v, -clamp, clamp)
    return v


def reinit_check(restart_gain: float, stagnation_flag: int, rng: RngStream) -> bool:
    """True when the particle should restart: rand() < c4 * 0.01 * flag.
    The draw happens unconditionally so replay never depends on the flag."""
    return rng.random() < restart_gain * 0.01 * stagnation_flag


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class ReplayBuffer:
    """Ring buffer of (state, action, reward, next_state) transitions."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items = []
        self._cursor = 0

    def __len__(self):
        return len(self._items)

    def add(self, transition):
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: RngStream):
        idx = rng.integers(0, len(self._items), size=batch_size)
        states = np.stack([self._items[i][0] for i in idx])
        actions = np.stack([self._items[i][1] for i in idx])
        rewards = np.array([self._items[i][2] for i in idx], dtype=float)
        next_states = np.stack([self._items[i][3] for i in idx])
        return states, actions, rewards, next_states


class ActorCritic:
    """Actor 3 -> hidden(tanh) -> actions(sigmoid, range-scaled) and critic
    (3 + actions) -> hidden(tanh) -> 1, trained together: the critic chases
    the one-step TD target, the actor climbs the critic's action gradient."""

    def __init__(self, action_low, action_high, hidden: int = 16,
                 actor_lr: float = 1e-3, critic_lr: float = 1e-2,
                 discount: float = 0.9, rng: RngStream | None = None):
        self.low = np.asarray(action_low, dtype=float)
        self.high = np.asarray(action_high, dtype=float)
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.discount = discount
        a_dim = self.low.size
        s_dim = STATE_DIM

        def init(shape, fan_in):
            if rng is None:
                return np.zeros(shape)
            return rng.normal(0.0, 1.0 / math.sqrt(fan_in), shape)

        self.w1 = init((hidden, s_dim), s_dim)
        self.b1 = np.zeros(hidden)
        self.w2 = init((a_dim, hidden), hidden)
        self.b2 = np.zeros(a_dim)
        self.q1 = init((hidden, s_dim + a_dim), s_dim + a_dim)
        self.qb1 = np.zeros(hidden)
        self.q2 = init((hidden,), hidden)
        self.qb2 = np.zeros(1)

    # -- forward passes ----------------------------------------------------

    def _actor_pre(self, state):
        hidden = np.tanh(self.w1 @ state + self.b1)
        return self.w2 @ hidden + self.b2, hidden

    def act(self, state, noise_scale: float = 0.0, rng: RngStream | None = None) -> np.ndarray:
        """Action for one state; Gaussian exploration noise is added to the
        pre-sigmoid outputs, so the sigmoid scaling keeps every entry inside
        its declared range."""
        pre, _ = self._actor_pre(np.asarray(state, dtype=float))
        if noise_scale > 0 and rng is not None:
            pre = pre + rng.normal(0.0, noise_scale, size=pre.shape)
        return self.low + _sigmoid(pre) * (self.high - self.low)

    def critic_value(self, state, action) -> float:
        x = np.concatenate([np.asarray(state, float), np.asarray(action, float)])
        hidden = np.tanh(self.q1 @ x + self.qb1)
        return float(self.q2 @ hidden + self.qb2[0])

    # -- training ----------------------------------------------------------

    def train_step(self, batch):
        """One TD(0) critic step followed by one policy-gradient actor step.
        Targets are treated as constants; updates are plain SGD."""
        states, actions, rewards, next_states = batch
        n = len(rewards)

        # TD target from the current policy at the next state
        h2 = np.tanh(next_states @ self.w1.T + self.b1)
        a2 = self.low + _sigmoid(h2 @ self.w2.T + self.b2) * (self.high - self.low)
        x2 = np.hstack([next_states, a2])
        q2 = np.tanh(x2 @ self.q1.T + self.qb1) @ self.q2 + self.qb2[0]
        target = rewards + self.discount * q2

        # critic gradients at the stored (state, action) pairs
        x = np.hstack([states, actions])
        hc = np.tanh(x @ self.q1.T + self.qb1)
        q = hc @ self.q2 + self.qb2[0]
        dq = 2.0 * (q - target) / n
        grad_q2 = hc.T @ dq
        grad_qb2 = dq.sum()
        back = (dq[:, None] * self.q2[None, :]) * (1.0 - hc ** 2)
        grad_q1 = back.T @ x
        grad_qb1 = back.sum(axis=0)
        self.q2 -= self.critic_lr * grad_q2
        self.qb2 -= self.critic_lr * grad_qb2
        self.q1 -= self.critic_lr * grad_q1
        self.qb1 -= self.critic_lr * grad_qb1

        # actor ascends dQ/da through the updated critic
        ha = np.tanh(states @ self.w1.T + self.b1)
        pre = ha @ self.w2.T + self.b2
        squashed = _sigmoid(pre)
        policy_actions = self.low + squashed * (self.high - self.low)
        xa = np.hstack([states, policy_actions])
        hq = np.tanh(xa @ self.q1.T + self.qb1)
        dq_dx = ((1.0 - hq ** 2) * self.q2) @ self.q1
        dq_da = dq_dx[:, STATE_DIM:]
        at_pre = dq_da * (self.high - self.low) * squashed * (1.0 - squashed)
        grad_w2 = at_pre.T @ ha / n
        grad_b2 = at_pre.mean(axis=0)
        back_a = (at_pre @ self.w2) * (1.0 - ha ** 2)
        grad_w1 = back_a.T @ states / n
        grad_b1 = back_a.mean(axis=0)
        self.w2 += self.actor_lr * grad_w2
        self.b2 += self.actor_lr * grad_b2
        self.w1 += self.actor_lr * grad_w1
        self.b1 += self.actor_lr * grad_b1

    # -- snapshots ----------------------------------------------------------

    _LAYERS = ("w1", "b1", "w2", "b2", "q1", "qb1", "q2", "qb2")

    def save_weights(self, path):
        """Snapshot format: a 'idcopt-weights 1' line, then per layer a
        'name dim...' header line followed by its values, one per line."""
        lines = ["idcopt-weights 1"]
        for name in self._LAYERS:
            arr = getattr(self, name)
            lines.append(name + " " + " ".join(str(d) for d in arr.shape))
            lines.extend(repr(float(v)) for v in arr.ravel())
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    def load_weights(self, path):
        with open(path, encoding="ascii") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != "idcopt-weights 1":
            raise ValueError(f"{path}: not a recognized weight snapshot")
        pos = 1
        for name in self._LAYERS:
            current = getattr(self, name)
            fields = lines[pos].split()
            shape = tuple(int(d) for d in fields[1:])
            if fields[0] != name or shape != current.shape:
                raise ValueError(f"{path}: layer {name} expects shape {current.shape}")
            count = int(np.prod(shape)) if shape else 1
            values = np.array([float(v) for v in lines[pos + 1: pos + 1 + count]])
            setattr(self, name, values.reshape(shape))
            pos += 1 + count


def _draw_exemplars(own: int, pbest_costs, prob: float, dim: int, rng: RngStream) -> np.ndarray:
    """Comprehensive-learning style teacher map: per dimension, with
    probability `prob` adopt the better of two random particles' bests,
    otherwise keep the particle's own index."""
    teachers = np.full(dim, own)
    tournament = rng.random(dim) < prob
    n = len(pbest_costs)
    for d in np.flatnonzero(tournament):
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n))
        teachers[d] = a if pbest_costs[a] <= pbest_costs[b] else b
    return teachers


def run_rlbpso(objective, params: RlBpsoParams | None = None, seed: int = 0,
               meter: BudgetMeter | None = None, cache=None) -> RunRecord:
    """Run the adaptive swarm; stops at max_iter or on budget exhaustion."""
    params = params or RlBpsoParams()
    meter = meter if meter is not None else BudgetMeter()
    init = RngStream(seed, "rlbpso/init")
    move = RngStream(seed, "rlbpso/move")
    exemplar_rng = RngStream(seed, "rlbpso/exemplar")
    noise_rng = RngStream(seed, "rlbpso/noise")
    net_rng = RngStream(seed, "rlbpso/net")
    train_rng = RngStream(seed, "rlbpso/train")
    record = RunRecord("rlbpso", seed)
    start = time.perf_counter()

    n, dim = params.n_particles, objective.dim
    low, high = action_bounds(params)
    agent = None
    buffer = None
    if params.action_override is None:
        agent = ActorCritic(low, high, params.hidden_units, params.actor_lr,
                            params.critic_lr, params.discount, rng=net_rng)
        if params.warm_start:
            agent.load_weights(params.warm_start)
        buffer = ReplayBuffer(params.replay_capacity)

    positions = init.random((n, dim))
    velocities = init.uniform(-1.0, 1.0, (n, dim))
    pbest_pos = positions.copy()
    pbest_cost = np.full(n, math.inf)
    best_pos = None
    best_bits = None
    best_cost = math.inf

    exhausted = False
    try:
        for i in range(n):
            bits = binarize(positions[i])
            c = evaluate(objective, bits, cache, meter)
            pbest_cost[i] = c
            if c < best_cost:
                best_cost, best_pos, best_bits = c, positions[i].copy(), bits
    except BudgetExhausted:
        exhausted = True
    if best_bits is not None:
        record.log(0, meter.evaluations_used, best_cost)

    teachers = np.repeat(np.arange(n)[:, None], dim, axis=1)
    since_pbest = np.zeros(n, dtype=int)
    teacher_age = np.zeros(n, dtype=int)
    best_stall = 0
    group_size = max(1, n // params.n_groups)
    dims_idx = np.arange(dim)

    if not exhausted:
        for it in range(1, params.max_iter + 1):
            state = state_features(positions, best_pos, it - 1, params.max_iter, best_stall)
            if params.action_override is not None:
                action = np.tile(np.asarray(params.action_override, dtype=float), params.n_groups)
            else:
                span = max(params.max_iter - 1, 1)
                sigma = params.noise_start + (params.noise_end - params.noise_start) * (it - 1) / span
                action = agent.act(state, sigma, noise_rng)
            coeffs = action.reshape(params.n_groups, PARAMS_PER_GROUP)

            previous_best = best_cost
            used_before = meter.evaluations_used
            improved = False
            try:
                for i in range(n):
                    w, c1, c2, c3, c4 = coeffs[min(i // group_size, params.n_groups - 1)]
                    r1 = move.random(dim)
                    r2 = move.random(dim)
                    r3 = move.random(dim)
                    exemplar_best = pbest_pos[teachers[i], dims_idx]
                    velocities[i] = rl_velocity_update(
                        velocities[i], positions[i], exemplar_best, best_pos, pbest_pos[i],
                        w, c1, c2, c3, r1, r2, r3, params.velocity_clamp,
                    )
                    flag = 1 if since_pbest[i] >= params.flag_after else 0
                    if reinit_check(c4, flag, move):
                        positions[i] = move.random(dim)
                        velocities[i] = 0.0
                    else:
                        positions[i] = np.clip(positions[i] + velocities[i], 0.0, 1.0)
                    bits = binarize(positions[i])
                    c = evaluate(objective, bits, cache, meter)
                    if c < pbest_cost[i]:
                        pbest_cost[i] = c
                        pbest_pos[i] = positions[i]
                        since_pbest[i] = 0
                        teacher_age[i] = 0
                    else:
                        since_pbest[i] += 1
                        teacher_age[i] += 1
                    if teacher_age[i] >= params.exemplar_refresh_after:
                        teachers[i] = _draw_exemplars(i, pbest_cost, params.exemplar_prob,
                                                      dim, exemplar_rng)
                        teacher_age[i] = 0
                    if c < best_cost:
                        best_cost = c
                        best_pos = positions[i].copy()
                        best_bits = bits
                        improved = True
            except BudgetExhausted:
                exhausted = True

            if not exhausted:
                best_stall = 0 if improved else best_stall + 1
                if agent is not None:
                    step_reward = reward(previous_best, best_cost)
                    next_state = state_features(positions, best_pos, it, params.max_iter, best_stall)
                    buffer.add((state, action, step_reward, next_state))
                    if len(buffer) >= params.batch_size:
                        agent.train_step(buffer.sample(params.batch_size, train_rng))
            if not exhausted or meter.evaluations_used > used_before:
                record.log(it, meter.evaluations_used, best_cost)
            if exhausted:
                break

    record.best_bits = best_bits
    record.best_cost = best_cost
    record.wall_time = time.perf_counter() - start
    return record

"""Shared building blocks: bit-string genomes, symmetric grid expansion,
metered objective evaluation, seeded RNG streams, and run traces."""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field

import numpy as np

MIRROR = "mirror"
ANTISYM = "antisym"
SYMMETRIES = (MIRROR, ANTISYM)


class EncodingError(ValueError):
    """Genome does not fit the grid profile (wrong length or alphabet)."""


class BudgetExhausted(RuntimeError):
    """Raised on a cache miss once the evaluation budget is spent."""


@dataclass(frozen=True)
class GridShape:
    """Cell grid with an odd row count.

    Rows 0 .. rows//2 (top half plus the centre row) are free; the remaining
    rows are produced by the symmetry map, so the genome length is
    (rows//2 + 1) * cols.
    """

    rows: int = 11
    cols: int = 16

    def __post_init__(self):
        if self.rows < 1 or self.rows % 2 == 0:
            raise ValueError(f"rows must be odd and positive, got {self.rows}")
        if self.cols < 1:
            raise ValueError(f"cols must be positive, got {self.cols}")

    @property
    def free_rows(self) -> int:
        return self.rows // 2 + 1

    @property
    def free_cells(self) -> int:
        return self.free_rows * self.cols


FULL_GRID = GridShape(11, 16)    # 96 free cells
REDUCED_GRID = GridShape(3, 4)   # 8 free cells, small enough to enumerate


def as_bits(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a 1-D uint8 vector of 0/1 values."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise EncodingError(f"genome must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0 or not np.isin(arr, (0, 1)).all():
        raise EncodingError("genome entries must all be 0 or 1")
    if dim is not None and arr.size != dim:
        raise EncodingError(f"genome has {arr.size} bits, expected {dim}")
    return arr.astype(np.uint8)


def bits_key(bits) -> str:
    """Text form of a genome: one '0'/'1' character per bit, row-major."""
    return (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def parse_bits(text: str, dim: int | None = None) -> np.ndarray:
    """Inverse of bits_key; a trailing newline is tolerated."""
    text = text.rstrip("\n")
    if not text or set(text) - {"0", "1"}:
        raise EncodingError("genome text must be a non-empty string of '0'/'1'")
    bits = np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")
    if dim is not None and bits.size != dim:
        raise EncodingError(f"genome text has {bits.size} bits, expected {dim}")
    return bits


def expand_genome(bits, symmetry: str = MIRROR, shape: GridShape = FULL_GRID) -> np.ndarray:
    """Expand free-row bits into the full grid under the symmetry map.

    Free rows are filled row-major (bit index = cols*row + col).  ``mirror``
    reflects each free row across the horizontal axis, ``antisym``
    point-reflects it (row and column order both reversed).
    """
    if symmetry not in SYMMETRIES:
        raise ValueError(f"symmetry must be one of {SYMMETRIES}, got {symmetry!r}")
    bits = as_bits(bits, shape.free_cells)
    grid = np.zeros((shape.rows, shape.cols), dtype=np.uint8)
    grid[: shape.free_rows] = bits.reshape(shape.free_rows, shape.cols)
    for r in range(shape.rows // 2):
        src = grid[r]
        grid[shape.rows - 1 - r] = src if symmetry == MIRROR else src[::-1]
    return grid


class Objective:
    """Deterministic cost over fixed-length binary genomes.

    Subclasses set ``name`` and ``dim`` and implement ``cost``, which must
    return a finite non-negative float and may not depend on hidden state:
    the same genome always yields the same cost.
    """

    name = "objective"
    dim = 0

    def cost(self, bits) -> float:
        raise NotImplementedError


class EvaluationCache:
    """Exact-match cost cache keyed on the genome text form.

    In-memory only, never persisted, and never shared across objectives.
    Writes are serialized so concurrent readers are safe.
    """

    def __init__(self):
        self._costs = {}
        self._lock = threading.Lock()

    def get(self, key: str):
        return self._costs.get(key)

    def store(self, key: str, cost: float):
        with self._lock:
            self._costs[key] = cost

    def __len__(self):
        return len(self._costs)


@dataclass
class BudgetMeter:
    """Counts objective evaluations against a hard ceiling; cache hits are free."""

    evaluations_max: int | None = None
    evaluations_used: int = 0
    cache_hits: int = 0

    def __post_init__(self):
        if self.evaluations_max is not None and self.evaluations_max < 0:
            raise ValueError("evaluations_max must be non-negative")
        self._lock = threading.Lock()

    @property
    def remaining(self) -> float:
        if self.evaluations_max is None:
            return math.inf
        return self.evaluations_max - self.evaluations_used

    def charge(self):
        with self._lock:
            if self.evaluations_max is not None and self.evaluations_used >= self.evaluations_max:
                raise BudgetExhausted(f"evaluation budget of {self.evaluations_max} spent")
            self.evaluations_used += 1

    def record_hit(self):
        with self._lock:
            self.cache_hits += 1


def evaluate(objective: Objective, bits, cache: EvaluationCache | None = None,
             meter: BudgetMeter | None = None) -> float:
    """Metered, cached objective call.

    A cache hit returns the stored cost without touching the budget; a miss
    charges the meter first, so evaluations_used can never exceed the
    ceiling.  Raises BudgetExhausted on a miss with no budget left.
    """
    key = bits_key(bits)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            if meter is not None:
                meter.record_hit()
            return hit
    if meter is not None:
        meter.charge()
    cost = float(objective.cost(bits))
    if not math.isfinite(cost) or cost < 0.0:
        raise ValueError(f"{objective.name} returned invalid cost {cost!r}")
    if cache is not None:
        cache.store(key, cost)
    return cost


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


class RngStream:
    """Seeded PCG64 stream addressed by (seed, label).

    Components derive their own child streams from fixed labels, so adding a
    new consumer (or logging) never shifts the draws of existing ones.  The
    draw counter tallies values handed out, which makes replay mismatches
    easy to localize.
    """

    def __init__(self, seed: int, label: str = "root"):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self.label = label
        self.draws = 0
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, _label_key(label)]))
        )

    def spawn(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{label}")

    def _count(self, size):
        self.draws += 1 if size is None else int(np.prod(size))

    def random(self, size=None):
        self._count(size)
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        self._count(size)
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        self._count(size)
        return self._gen.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        self._count(size)
        return self._gen.normal(loc, scale, size)

    def coin_flips(self, dim: int) -> np.ndarray:
        """Fair-coin bit vector of length dim."""
        return (self.random(dim) < 0.5).astype(np.uint8)


@dataclass
class IterationEntry:
    iteration: int
    evaluations: int
    best_cost: float


@dataclass
class RunRecord:
    """Trace of one seeded run: per-iteration global best plus the final genome."""

    algorithm: str
    seed: int
    entries: list = field(default_factory=list)
    best_bits: np.ndarray | None = None
    best_cost: float = math.inf
    wall_time: float = 0.0

    def log(self, iteration: int, evaluations: int, best_cost: float):
        if self.entries and best_cost > self.entries[-1].best_cost:
            raise ValueError("global best cost must be non-increasing")
        self.entries.append(IterationEntry(int(iteration), int(evaluations), float(best_cost)))


def swarm_diversity(positions, best) -> float:
    """Mean Euclidean distance from each position to the best one, scaled by
    1/sqrt(D) so unit-cube coordinates land in [0, 1]."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.size == 0:
        raise ValueError("diversity needs at least one particle")
    dists = np.linalg.norm(pos - np.asarray(best, dtype=float), axis=1)
    return float(dists.mean() / math.sqrt(pos.shape[1]))


def binarize(positions) -> np.ndarray:
    """Threshold continuous coordinates at 0.5 (0.5 rounds up to 1)."""
    return (np.asarray(positions) >= 0.5).astype(np.uint8)

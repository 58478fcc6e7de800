"""Cost functions: an LC-resonance surrogate for interdigitated-capacitor
cell patterns, pseudo-Boolean benchmarks with known optima, and a
line-protocol bridge to external evaluator processes.

The surrogate scores a pattern through its metal/empty boundary count E.
More boundary means more fringing capacitance, hence a larger downward
shift of the resonant frequency when a high-permittivity sample replaces
the reference load, and therefore a lower cost f_ref / |f_sam - f_ref|.
Profile constants are picked so the empty-pattern resonance lands near the
1.5 GHz and 5 GHz design points; they are deliberate stand-ins and are not
calibrated against any EM solver.
"""

from __future__ import annotations

import math
import os
import select
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    FULL_GRID,
    MIRROR,
    REDUCED_GRID,
    SYMMETRIES,
    GridShape,
    Objective,
    as_bits,
    bits_key,
    expand_genome,
)

TWO_PI = 2.0 * math.pi


def fringe_edges(grid) -> int:
    """Number of orthogonally adjacent cell pairs with differing values."""
    g = np.asarray(grid)
    horiz = np.count_nonzero(g[:, 1:] != g[:, :-1])
    vert = np.count_nonzero(g[1:, :] != g[:-1, :])
    return int(horiz + vert)


def resonant_frequency(capacitance: float, inductance: float) -> float:
    """LC resonance 1 / (2*pi*sqrt(L*C)), in hertz."""
    if capacitance <= 0 or inductance <= 0:
        raise ValueError("capacitance and inductance must be positive")
    return 1.0 / (TWO_PI * math.sqrt(inductance * capacitance))


@dataclass(frozen=True)
class SurrogateProfile:
    """Constants of the LC surrogate.

    eps_ref and eps_sam are the relative permittivities of the reference and
    sample loads; edge_capacitance is the fringing contribution of one
    metal/empty boundary edge; delta_min floors the frequency shift so
    zero-shift patterns get a large but finite penalty.
    """

    name: str
    shape: GridShape = FULL_GRID
    inductance: float = 10e-9
    base_capacitance: float = 1.0e-12
    edge_capacitance: float = 2.0e-15
    eps_ref: float = 1.0
    eps_sam: float = 2.0
    symmetry: str = MIRROR
    delta_min: float = 1e3

    def __post_init__(self):
        if min(self.inductance, self.base_capacitance, self.edge_capacitance, self.delta_min) <= 0:
            raise ValueError("inductance, capacitances and delta_min must be positive")
        if self.eps_sam == self.eps_ref:
            raise ValueError("sample permittivity must differ from the reference")
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}")


IDC_1500 = SurrogateProfile("idc1500")                     # ~1.59 GHz empty-pattern resonance
IDC_5000 = SurrogateProfile("idc5000", inductance=0.9e-9)  # ~5.3 GHz
REDUCED_3X4 = SurrogateProfile("reduced3x4", shape=REDUCED_GRID)
PROFILES = {p.name: p for p in (IDC_1500, IDC_5000, REDUCED_3X4)}


def surrogate_cost(bits, profile: SurrogateProfile) -> float:
    """f_ref / |f_sam - f_ref| for the expanded pattern.

    Shifts smaller than delta_min are clamped, which keeps the cost finite
    for zero-boundary (all-metal / all-empty) patterns.
    """
    edges = fringe_edges(expand_genome(bits, profile.symmetry, profile.shape))

    def freq(eps):
        cap = profile.base_capacitance + eps * profile.edge_capacitance * edges
        return resonant_frequency(cap, profile.inductance)

    f_ref = freq(profile.eps_ref)
    shift = abs(freq(profile.eps_sam) - f_ref)
    return f_ref / max(shift, profile.delta_min)


def onemax_cost(bits) -> float:
    """Ones still missing: D - popcount."""
    b = np.asarray(bits)
    return float(b.size - np.count_nonzero(b))


def trap_cost(bits, block: int = 4) -> float:
    """Deceptive block trap: a block of all ones scores 0, anything else
    scores (ones-in-block + 1); all-zeros is the deceptive attractor."""
    b = np.asarray(bits)
    if block < 1 or b.size % block:
        raise ValueError(f"dimension {b.size} not divisible by block size {block}")
    ones = b.reshape(-1, block).sum(axis=1)
    return float(np.where(ones == block, 0, ones + 1).sum())


class SurrogateObjective(Objective):
    kind = "surrogate"

    def __init__(self, profile: SurrogateProfile = IDC_1500, symmetry: str | None = None):
        if symmetry is not None and symmetry != profile.symmetry:
            profile = replace(profile, symmetry=symmetry)
        self.profile = profile
        self.dim = profile.shape.free_cells
        self.name = f"surrogate:{profile.name}:{profile.symmetry}"

    def cost(self, bits) -> float:
        return surrogate_cost(bits, self.profile)


class OneMaxObjective(Objective):
    kind = "onemax"

    def __init__(self, dim: int = 96):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.name = f"onemax:{dim}"

    def cost(self, bits) -> float:
        return onemax_cost(as_bits(bits, self.dim))


class TrapObjective(Objective):
    kind = "trap"

    def __init__(self, dim: int = 96, block: int = 4):
        if dim < 1 or block < 1 or dim % block:
            raise ValueError(f"dim {dim} must be a positive multiple of block {block}")
        self.dim = dim
        self.block = block
        self.name = f"trap:{dim}:{block}"

    def cost(self, bits) -> float:
        return trap_cost(as_bits(bits, self.dim), self.block)


class ConstantObjective(Objective):
    """Fixed-cost objective; isolates an optimizer's evaluation pattern."""

    kind = "constant"

    def __init__(self, dim: int = 96, value: float = 1.0):
        self.dim = dim
        self.value = float(value)
        self.name = f"constant:{value}"

    def cost(self, bits) -> float:
        return self.value


class EvaluatorError(RuntimeError):
    """External evaluator failure; carries the genome text that caused it."""

    def __init__(self, message: str, genome_text: str | None = None):
        super().__init__(message)
        self.genome_text = genome_text


class _ChildExited(Exception):
    pass


class ExternalEvaluator:
    """Line-protocol child process standing in for an expensive simulator.

    Wire protocol, bit exact: each request is the genome text (one '0'/'1'
    character per bit) plus a newline; each reply is one decimal cost plus a
    newline, strictly in request order.  The child reads until end of input.
    Requests are serialized per child; a child that dies is restarted up to
    max_restarts times per request, while timeouts and malformed replies
    surface immediately as EvaluatorError.
    """

    def __init__(self, command, timeout: float = 30.0, max_restarts: int = 1):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("evaluator command must not be empty")
        self.timeout = float(timeout)
        self.max_restarts = int(max_restarts)
        self._proc = None
        self._buf = b""
        self._lock = threading.Lock()

    def _start(self):
        self._buf = b""
        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
        )

    def _stop(self):
        proc, self._proc = self._proc, None
        self._buf = b""
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=0.5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def close(self):
        with self._lock:
            self._stop()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_line(self, genome_text: str) -> str:
        # select on the raw pipe; bufsize=0 keeps all unread bytes in the fd
        fd = self._proc.stdout.fileno()
        deadline = time.monotonic() + self.timeout
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self._stop()
                raise EvaluatorError("timed out waiting for evaluator reply", genome_text)
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise _ChildExited()
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("ascii", errors="replace").strip()

    def ask(self, genome_text: str) -> float:
        with self._lock:
            last_exit = None
            for _ in range(self.max_restarts + 1):
                try:
                    if self._proc is None or self._proc.poll() is not None:
                        self._start()
                    self._proc.stdin.write((genome_text + "\n").encode("ascii"))
                    self._proc.stdin.flush()
                    line = self._read_line(genome_text)
                except (BrokenPipeError, _ChildExited):
                    last_exit = self._proc.poll() if self._proc else None
                    self._stop()
                    continue
                try:
                    return float(line)
                except ValueError:
                    self._stop()
                    raise EvaluatorError(f"malformed evaluator reply {line!r}", genome_text) from None
            raise EvaluatorError(
                f"evaluator child kept exiting (last status {last_exit})", genome_text
            )


def external_cost(bits, evaluator: ExternalEvaluator) -> float:
    """Send one genome down the wire and return the child's cost."""
    return evaluator.ask(bits_key(bits))


class ExternalObjective(Objective):
    kind = "external"

    def __init__(self, command, dim: int = 96, timeout: float = 30.0, max_restarts: int = 1):
        self.evaluator = (
            command if isinstance(command, ExternalEvaluator)
            else ExternalEvaluator(command, timeout=timeout, max_restarts=max_restarts)
        )
        self.dim = dim
        self.name = "external"

    def cost(self, bits) -> float:
        return external_cost(as_bits(bits, self.dim), self.evaluator)

    def close(self):
        self.evaluator.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

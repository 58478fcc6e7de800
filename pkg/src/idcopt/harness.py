"""Experiment runner: configuration loading, seeded campaigns, a brute-force
oracle, grid rendering, evaluation-count probes, and the command line.

Exit codes: 0 success, 1 configuration error, 2 runtime/evaluator error.
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bpso import BpsoParams, run_bpso
from .classic import (
    AbcConfig,
    AcoParams,
    AloParams,
    SaSchedule,
    run_abc,
    run_aco,
    run_alo,
    run_sa,
)
from .core import (
    FULL_GRID,
    MIRROR,
    REDUCED_GRID,
    SYMMETRIES,
    BudgetMeter,
    EvaluationCache,
    GridShape,
    Objective,
    bits_key,
    expand_genome,
    parse_bits,
)
from .objectives import (
    PROFILES,
    ConstantObjective,
    EvaluatorError,
    ExternalObjective,
    OneMaxObjective,
    SurrogateObjective,
    TrapObjective,
)
from .rlbpso import RlBpsoParams, run_rlbpso


class ConfigError(ValueError):
    """Bad configuration file, flag, or field."""


# algorithm name -> (params class, run function, preset overrides)
_ALGORITHMS = {
    "bpso": (BpsoParams, run_bpso, {}),
    "rlbpso": (RlBpsoParams, run_rlbpso, {}),
    "abc": (AbcConfig, run_abc, {}),
    "aco": (AcoParams, run_aco, {}),
    "alo": (AloParams, run_alo, {}),
    "sa": (SaSchedule, run_sa, {}),
    "sa_random": (SaSchedule, run_sa, {"mutation": "random"}),
    "sa_swap": (SaSchedule, run_sa, {"mutation": "swap"}),
}

SIX_ALGORITHMS = ("bpso", "sa", "abc", "aco", "alo", "rlbpso")
TABLE_CONFIGS = ("bpso", "sa_random", "sa_swap", "abc", "aco", "alo", "rlbpso")

_SHAPES_BY_DIM = {FULL_GRID.free_cells: FULL_GRID, REDUCED_GRID.free_cells: REDUCED_GRID}


def algorithm_names():
    return tuple(_ALGORITHMS)


def run_algorithm(name: str, objective: Objective, seed: int = 0,
                  meter: BudgetMeter | None = None, cache=None, overrides=None):
    """Build parameters for `name` (registry presets plus overrides) and run it."""
    try:
        params_cls, run_fn, preset = _ALGORITHMS[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm {name!r} (choose from {', '.join(_ALGORITHMS)})") from None
    kwargs = dict(preset)
    kwargs.update(overrides or {})
    try:
        params = params_cls(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad parameters for algorithm {name!r}: {err}") from None
    record = run_fn(objective, params, seed=seed, meter=meter, cache=cache)
    record.algorithm = name
    return record


# ------------------------------------------------------------- configuration


@dataclass
class ExperimentConfig:
    algorithms: list = field(default_factory=lambda: ["bpso"])
    objective: dict = field(default_factory=lambda: {"kind": "surrogate", "profile": "idc1500"})
    seeds: list = field(default_factory=lambda: [42])
    budget: int | None = 650
    out: str | None = None
    params: dict = field(default_factory=dict)


def parse_objective_spec(spec) -> dict:
    """Normalize an objective spec to a dict.

    Accepts dicts with a 'kind' key or compact strings:
    surrogate[:profile[:symmetry]], onemax[:dim], trap[:dim[:block]],
    external:<command line>.
    """
    if isinstance(spec, dict):
        if "kind" not in spec:
            raise ConfigError("objective spec needs a 'kind' field")
        return dict(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"objective spec must be a dict or string, got {type(spec).__name__}")
    kind, _, rest = spec.partition(":")
    if kind == "external":
        if not rest:
            raise ConfigError("external objective needs a command, e.g. external:python child.py")
        return {"kind": "external", "command": rest}
    parts = rest.split(":") if rest else []
    try:
        if kind == "surrogate":
            out = {"kind": "surrogate"}
            if parts:
                out["profile"] = parts[0]
            if len(parts) > 1:
                out["symmetry"] = parts[1]
            return out
        if kind == "onemax":
            return {"kind": "onemax", "dim": int(parts[0])} if parts else {"kind": "onemax"}
        if kind == "trap":
            out = {"kind": "trap"}
            if parts:
                out["dim"] = int(parts[0])
            if len(parts) > 1:
                out["block"] = int(parts[1])
            return out
    except ValueError as err:
        raise ConfigError(f"bad objective spec {spec!r}: {err}") from None
    raise ConfigError(f"unknown objective kind {kind!r} (surrogate, onemax, trap, external)")


def make_objective(spec) -> Objective:
    """Construct the objective described by `spec` (see parse_objective_spec)."""
    spec = parse_objective_spec(spec)
    kind = spec.get("kind")
    try:
        if kind == "surrogate":
            profile_name = spec.get("profile", "idc1500")
            if profile_name not in PROFILES:
                raise ConfigError(
                    f"unknown surrogate profile {profile_name!r} (choose from {', '.join(PROFILES)})"
                )
            symmetry = spec.get("symmetry")
            if symmetry is not None and symmetry not in SYMMETRIES:
                raise ConfigError(f"unknown symmetry {symmetry!r} (choose from {SYMMETRIES})")
            return SurrogateObjective(PROFILES[profile_name], symmetry=symmetry)
        if kind == "onemax":
            return OneMaxObjective(dim=int(spec.get("dim", 96)))
        if kind == "trap":
            return TrapObjective(dim=int(spec.get("dim", 96)), block=int(spec.get("block", 4)))
        if kind == "external":
            if "command" not in spec:
                raise ConfigError("external objective needs a 'command' field")
            return ExternalObjective(
                spec["command"],
                dim=int(spec.get("dim", 96)),
                timeout=float(spec.get("timeout", 30.0)),
                max_restarts=int(spec.get("max_restarts", 1)),
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad objective spec: {err}") from None
    raise ConfigError(f"unknown objective kind {kind!r} (surrogate, onemax, trap, external)")


_CONFIG_KEYS = {"algorithms", "algorithm", "objective", "seeds", "seed", "budget", "out", "params"}


def load_config(path) -> ExperimentConfig:
    """Read a JSON config file, filling documented defaults for absent fields."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError(f"{path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(sorted(unknown))}")
    if "algorithm" in raw and "algorithms" in raw:
        raise ConfigError(f"{path}: 'algorithm' conflicts with 'algorithms'")
    if "seed" in raw and "seeds" in raw:
        raise ConfigError(f"{path}: 'seed' conflicts with 'seeds'")

    cfg = ExperimentConfig()
    if "algorithm" in raw:
        cfg.algorithms = [raw["algorithm"]]
    if "algorithms" in raw:
        cfg.algorithms = list(raw["algorithms"])
    if "objective" in raw:
        cfg.objective = raw["objective"]
    if "seed" in raw:
        cfg.seeds = [raw["seed"]]
    if "seeds" in raw:
        cfg.seeds = list(raw["seeds"])
    if "budget" in raw:
        cfg.budget = raw["budget"]
    if "out" in raw:
        cfg.out = raw["out"]
    if "params" in raw:
        cfg.params = dict(raw["params"])
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    if not cfg.algorithms:
        raise ConfigError("field 'algorithms': at least one algorithm is required")
    for name in cfg.algorithms:
        if name not in _ALGORITHMS:
            raise ConfigError(f"field 'algorithms': unknown algorithm {name!r}")
    if not cfg.seeds:
        raise ConfigError("field 'seeds': at least one seed is required")
    for s in cfg.seeds:
        if not isinstance(s, int) or s < 0:
            raise ConfigError(f"field 'seeds': seeds must be non-negative integers, got {s!r}")
    if cfg.budget is not None and (not isinstance(cfg.budget, int) or cfg.budget < 1):
        raise ConfigError(f"field 'budget': must be a positive integer or null, got {cfg.budget!r}")
    if not isinstance(cfg.params, dict):
        raise ConfigError("field 'params': must map algorithm names to parameter objects")
    for name in cfg.params:
        if name not in _ALGORITHMS:
            raise ConfigError(f"field 'params': unknown algorithm {name!r}")
    cfg.objective = parse_objective_spec(cfg.objective)


# ------------------------------------------------------------------ campaign


@dataclass
class CellResult:
    algorithm: str
    seed: int
    record: object | None = None
    error: str | None = None


@dataclass
class ReportRow:
    algorithm: str
    best_cost: float | None
    median_cost: float | None
    seed_costs: list
    evaluations: list
    wall_times: list


@dataclass
class ComparisonReport:
    """Per-algorithm summary, sorted by median best cost ascending; wall
    times live in a separate artifact so the report itself is reproducible
    byte for byte."""

    rows: list

    def to_text(self) -> str:
        header = ("algorithm", "best_cost", "median_cost", "evaluations")
        table = [header]
        for row in self.rows:
            table.append((
                row.algorithm,
                "failed" if row.best_cost is None else repr(row.best_cost),
                "failed" if row.median_cost is None else repr(row.median_cost),
                "/".join(str(e) for e in row.evaluations),
            ))
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip() for r in table]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["algorithm,best_cost,median_cost,seed_costs,evaluations"]
        for row in self.rows:
            costs = ";".join("failed" if c is None else repr(c) for c in row.seed_costs)
            evals = ";".join(str(e) for e in row.evaluations)
            best = "" if row.best_cost is None else repr(row.best_cost)
            med = "" if row.median_cost is None else repr(row.median_cost)
            lines.append(f"{row.algorithm},{best},{med},{costs},{evals}")
        return "\n".join(lines) + "\n"

    def timings_csv(self) -> str:
        lines = ["algorithm,seed_index,wall_time_seconds"]
        for row in self.rows:
            for i, t in enumerate(row.wall_times):
                lines.append(f"{row.algorithm},{i},{'' if t is None else repr(t)}")
        return "\n".join(lines) + "\n"


def build_report(cells) -> ComparisonReport:
    by_algo = {}
    for cell in cells:
        by_algo.setdefault(cell.algorithm, []).append(cell)
    rows = []
    for name, group in by_algo.items():
        costs = [c.record.best_cost if c.record is not None else None for c in group]
        ok = [c for c in costs if c is not None]
        rows.append(ReportRow(
            algorithm=name,
            best_cost=min(ok) if ok else None,
            median_cost=statistics.median(ok) if ok else None,
            seed_costs=costs,
            evaluations=[c.record.entries[-1].evaluations if c.record is not None and c.record.entries else 0
                         for c in group],
            wall_times=[c.record.wall_time if c.record is not None else None for c in group],
        ))
    rows.sort(key=lambda r: (r.median_cost is None, r.median_cost if r.median_cost is not None else 0.0,
                             r.algorithm))
    return ComparisonReport(rows)


def run_experiment(config: ExperimentConfig, objective: Objective | None = None):
    """Run every (algorithm, seed) cell under its own meter and cache.

    Per-cell failures are captured, marked in the report, and do not abort
    the campaign.  Returns (cells, report); with config.out set, also writes
    per-run convergence CSVs, best-genome text files, the comparison report,
    and the timings file.
    """
    objective = objective if objective is not None else make_objective(config.objective)
    cells = []
    for name in config.algorithms:
        for seed in config.seeds:
            meter = BudgetMeter(config.budget)
            try:
                record = run_algorithm(name, objective, seed=seed, meter=meter,
                                       cache=EvaluationCache(),
                                       overrides=config.params.get(name))
                cells.append(CellResult(name, seed, record=record))
            except KeyboardInterrupt:
                raise
            except Exception as err:
                cells.append(CellResult(name, seed, error=f"{type(err).__name__}: {err}"))
    report = build_report(cells)
    if config.out:
        write_outputs(cells, report, config.out)
    return cells, report


def convergence_csv(record) -> str:
    lines = ["iteration,evaluations,best_cost"]
    for entry in record.entries:
        lines.append(f"{entry.iteration},{entry.evaluations},{entry.best_cost!r}")
    return "\n".join(lines) + "\n"


def write_outputs(cells, report: ComparisonReport, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for cell in cells:
        stem = f"{cell.algorithm}_seed{cell.seed}"
        if cell.record is None:
            (out / f"{stem}.failed").write_text((cell.error or "failed") + "\n")
            continue
        (out / f"{stem}.csv").write_text(convergence_csv(cell.record))
        if cell.record.best_bits is not None:
            (out / f"{stem}_best.txt").write_text(bits_key(cell.record.best_bits) + "\n")
    (out / "comparison.txt").write_text(report.to_text())
    (out / "comparison.csv").write_text(report.to_csv())
    (out / "timings.csv").write_text(report.timings_csv())


# ------------------------------------------------------------------- oracle


def oracle_bruteforce(objective: Objective, max_dim: int = 20):
    """Exhaustively enumerate every genome and return (best_bits, best_cost).

    Genome i has bit d equal to (i >> d) & 1, so ties resolve to the lowest
    integer.  This is the independent ground truth for small instances;
    spaces larger than 2**max_dim are refused.
    """
    dim = objective.dim
    if dim > max_dim:
        raise ConfigError(f"{dim}-bit space too large to enumerate (limit {max_dim} bits)")
    shifts = np.arange(dim)
    best_bits = None
    best_cost = math.inf
    for value in range(1 << dim):
        bits = ((value >> shifts) & 1).astype(np.uint8)
        cost = float(objective.cost(bits))
        if cost < best_cost:
            best_cost, best_bits = cost, bits
    return best_bits, best_cost


# ------------------------------------------------------------------ rendering


def shape_for(dim: int) -> GridShape:
    try:
        return _SHAPES_BY_DIM[dim]
    except KeyError:
        raise ConfigError(
            f"no grid profile with {dim} free cells (known: {sorted(_SHAPES_BY_DIM)})"
        ) from None


def render_grid(bits, symmetry: str = MIRROR, shape: GridShape | None = None) -> str:
    """Text art of the expanded pattern: '#' metal, '.' empty."""
    shape = shape or shape_for(len(bits))
    grid = expand_genome(bits, symmetry, shape)
    return "\n".join("".join("#" if v else "." for v in row) for row in grid) + "\n"


def render_svg(bits, symmetry: str = MIRROR, shape: GridShape | None = None,
               cell_mm: float = 1.5) -> str:
    """SVG drawing of the pattern with one cell_mm square per metal cell."""
    shape = shape or shape_for(len(bits))
    grid = expand_genome(bits, symmetry, shape)
    width = shape.cols * cell_mm
    height = shape.rows * cell_mm
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}mm" height="{height}mm" '
        f'viewBox="0 0 {width} {height}">',
        f'  <rect width="{width}" height="{height}" fill="white"/>',
    ]
    for r in range(shape.rows):
        for c in range(shape.cols):
            if grid[r, c]:
                parts.append(
                    f'  <rect x="{c * cell_mm}" y="{r * cell_mm}" '
                    f'width="{cell_mm}" height="{cell_mm}" fill="black"/>'
                )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -------------------------------------------------------------------- probe

PROBE_ALGORITHMS = ("bpso", "abc", "aco", "rlbpso", "sa")


def _probe_overrides(name: str, n: int, max_iter: int) -> dict:
    if name in ("bpso", "rlbpso"):
        return {"n_particles": n, "max_iter": max_iter}
    if name == "aco":
        return {"n_ants": n, "max_iter": max_iter}
    if name == "alo":
        return {"n_antlions": n, "max_iter": max_iter}
    if name == "abc":
        # employed = onlooker = n keeps the per-iteration count exactly 2n
        return {"total_bees": 2 * n, "employed": n, "onlooker": n,
                "limit": 10 ** 9, "max_iter": max_iter}
    if name in ("sa", "sa_random", "sa_swap"):
        return {"max_iter": max_iter}
    raise ConfigError(f"unknown algorithm {name!r}")


def eval_count_probe(algorithm: str, sizes=(5, 10, 20), max_iter: int = 25, dim: int = 24):
    """Objective-call counts versus the population-size parameter, measured
    with an uncached constant objective and no budget; exposes the
    linear-in-N scaling of the population methods and the N-independence of
    annealing.  Returns [(n, evaluations_used), ...]."""
    objective = ConstantObjective(dim=dim)
    counts = []
    for n in sizes:
        meter = BudgetMeter()
        run_algorithm(algorithm, objective, seed=0, meter=meter,
                      overrides=_probe_overrides(algorithm, n, max_iter))
        counts.append((n, meter.evaluations_used))
    return counts


# ---------------------------------------------------------------------- CLI


def _add_campaign_flags(sp):
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--algo", help="comma-separated algorithm list")
    sp.add_argument("--objective", help="objective spec, e.g. surrogate:idc1500 or onemax:96")
    sp.add_argument("--seed", type=int, help="single seed")
    sp.add_argument("--seeds", help="comma-separated seed list")
    sp.add_argument("--budget", type=int, help="evaluation budget per run")
    sp.add_argument("--out", help="output directory (default: results)")
    sp.add_argument("--symmetry", choices=SYMMETRIES, help="surrogate grid symmetry")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idcopt",
        description="Binary metaheuristics for interdigitated-capacitor cell patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one or more (algorithm, seed) cells")
    _add_campaign_flags(run_p)

    cmp_p = sub.add_parser("compare", help="run a multi-algorithm campaign and report it")
    _add_campaign_flags(cmp_p)

    oracle_p = sub.add_parser("oracle", help="brute-force optimum of a small objective")
    oracle_p.add_argument("--objective", required=True,
                          help="objective spec with at most 20 bits, e.g. onemax:8")
    oracle_p.add_argument("--symmetry", choices=SYMMETRIES)

    render_p = sub.add_parser("render", help="draw a genome as text (and optionally SVG)")
    render_p.add_argument("genome", help="bit string, or a path to a genome text file")
    render_p.add_argument("--symmetry", choices=SYMMETRIES, default=MIRROR)
    render_p.add_argument("--svg", help="also write an SVG file to this path")

    probe_p = sub.add_parser("probe", help="evaluation-count scaling probe")
    probe_p.add_argument("--algo", help=f"comma-separated subset of {', '.join(PROBE_ALGORITHMS)}")
    probe_p.add_argument("--sizes", default="5,10,20", help="population sizes to probe")

    return parser


def _parse_int_list(text: str, flag: str):
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as err:
        raise ConfigError(f"{flag}: {err}") from None


def _campaign_config(args, default_algorithms) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if not args.config and not args.algo:
        cfg.algorithms = list(default_algorithms)
    if args.algo:
        cfg.algorithms = [a.strip() for a in args.algo.split(",") if a.strip()]
    if args.seed is not None and args.seeds:
        raise ConfigError("--seed conflicts with --seeds")
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.seeds:
        cfg.seeds = _parse_int_list(args.seeds, "--seeds")
    if args.budget is not None:
        cfg.budget = args.budget
    if args.objective:
        cfg.objective = args.objective
    cfg.objective = parse_objective_spec(cfg.objective)
    if args.symmetry:
        cfg.objective["symmetry"] = args.symmetry
    cfg.out = args.out or cfg.out or "results"
    validate_config(cfg)
    return cfg


def _cmd_campaign(args, default_algorithms) -> int:
    cfg = _campaign_config(args, default_algorithms)
    cells, report = run_experiment(cfg)
    print(report.to_text(), end="")
    failures = [c for c in cells if c.record is None]
    for cell in failures:
        print(f"failed: {cell.algorithm} seed {cell.seed}: {cell.error}", file=sys.stderr)
    print(f"wrote {cfg.out}/comparison.csv")
    return 2 if failures else 0


def _cmd_oracle(args) -> int:
    spec = parse_objective_spec(args.objective)
    if args.symmetry:
        spec["symmetry"] = args.symmetry
    objective = make_objective(spec)
    bits, cost = oracle_bruteforce(objective)
    print(f"objective: {objective.name}")
    print(f"best cost: {cost!r}")
    print(bits_key(bits))
    return 0


def _read_genome_arg(text: str):
    if set(text) <= {"0", "1"} and text:
        return parse_bits(text)
    path = Path(text)
    if path.exists():
        return parse_bits(path.read_text())
    raise ConfigError(f"genome argument {text!r} is neither a bit string nor a readable file")


def _cmd_render(args) -> int:
    bits = _read_genome_arg(args.genome)
    print(render_grid(bits, args.symmetry), end="")
    if args.svg:
        Path(args.svg).write_text(render_svg(bits, args.symmetry))
        print(f"wrote {args.svg}")
    return 0


def _cmd_probe(args) -> int:
    names = [a.strip() for a in args.algo.split(",")] if args.algo else list(PROBE_ALGORITHMS)
    sizes = tuple(_parse_int_list(args.sizes, "--sizes"))
    print("algorithm  " + "  ".join(f"N={n}" for n in sizes))
    for name in names:
        counts = eval_count_probe(name, sizes=sizes)
        print(f"{name:<9}  " + "  ".join(str(used).rjust(len(f"N={n}"))
                                          for (n, used) in counts))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_campaign(args, default_algorithms=("bpso",))
        if args.command == "compare":
            return _cmd_campaign(args, default_algorithms=SIX_ALGORITHMS)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "render":
            return _cmd_render(args)
        if args.command == "probe":
            return _cmd_probe(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except EvaluatorError as err:
        print(f"evaluator error: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Binary metaheuristics for interdigitated-capacitor sensor cell patterns:
six seeded, budget-metered optimizers over a pluggable objective layer."""

from .bpso import BpsoParams, run_bpso
from .classic import (
    AbcConfig,
    AcoParams,
    AloParams,
    PheromoneTable,
    SaSchedule,
    run_abc,
    run_aco,
    run_alo,
    run_sa,
)
from .core import (
    ANTISYM,
    FULL_GRID,
    MIRROR,
    REDUCED_GRID,
    BudgetExhausted,
    BudgetMeter,
    EncodingError,
    EvaluationCache,
    GridShape,
    Objective,
    RngStream,
    RunRecord,
    binarize,
    bits_key,
    evaluate,
    expand_genome,
    parse_bits,
    swarm_diversity,
)
from .harness import (
    ComparisonReport,
    ConfigError,
    ExperimentConfig,
    SIX_ALGORITHMS,
    TABLE_CONFIGS,
    eval_count_probe,
    load_config,
    make_objective,
    oracle_bruteforce,
    render_grid,
    render_svg,
    run_algorithm,
    run_experiment,
)
from .objectives import (
    IDC_1500,
    IDC_5000,
    PROFILES,
    REDUCED_3X4,
    ConstantObjective,
    EvaluatorError,
    ExternalEvaluator,
    ExternalObjective,
    OneMaxObjective,
    SurrogateObjective,
    SurrogateProfile,
    TrapObjective,
    external_cost,
    fringe_edges,
    onemax_cost,
    resonant_frequency,
    surrogate_cost,
    trap_cost,
)
from .rlbpso import ActorCritic, RlBpsoParams, run_rlbpso

__version__ = "0.1.0"

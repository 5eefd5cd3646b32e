"""Preferential-attachment growth models with exact oracles.

Simulators for the Simon, II-PA, Price, and Barabasi-Albert growth
processes and the continuous-time Yule model, together with their
closed-form limit distributions, exact finite-time expectation recurrences,
a brute-force trajectory enumerator, and the statistics needed to verify
each model against its theory.
"""

from .models import (
    Checkpoints,
    EventKind,
    EventLog,
    EventRecord,
    GraphState,
    ModelSpec,
    ResourceCapError,
    RunResult,
    ba_init,
    ba_run_identified,
    ba_run_rescaled,
    ba_run_single,
    ba_step_single,
    check_state_invariants,
    iipa_run,
    price_init,
    price_run,
    price_step,
    run_coupled_m1,
    simon_init,
    simon_run,
    simon_run_with_genealogy,
    simon_step,
)
from .rng import make_rng
from .stats import (
    DegreeHistogram,
    FitReport,
    collect_descendant_waiting_times,
    collect_waiting_times,
    concentration_scan,
    fit_exponential_rate,
    histogram,
    histogram_from_checkpoint,
    histogram_from_sizes,
    ks_statistic,
    tail_slope,
    total_variation,
)
from .theory import (
    ExactDistribution,
    ExpectationTable,
    TheoryPmf,
    ba_expected,
    ba_limit_pmf,
    enumerate_exact,
    iipa_expected,
    iipa_limit_pmf,
    pack_multiset,
    price_expected,
    price_limit_pmf,
    product_asymptotic_check,
    simon_expected,
    simon_limit_pmf,
    theory_pmf,
    yule_fixed_genus_pmf,
    yule_limit_pmf,
)
from .yule import (
    YuleCaps,
    genus_birth_time_ppf,
    yule_genus_size_at,
    yule_sample_genus_direct,
    yule_simulate_event_driven,
)

__version__ = "0.1.0"

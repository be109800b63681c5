"""Performance laboratory for slotted Aloha with batch service.

Analytic engine (throughput, stability region, attempt-rate fixed point,
queue laws, mean waiting time), a slot-level stochastic simulator, and an
experiment runner that reproduces the reference figures by overlaying
simulation on analysis.
"""

from .analytic import (
    AttemptSolution,
    NoStableRoot,
    QueueLaws,
    StableRegion,
    UnboundedDelay,
    WaitingDecomposition,
    busy_second_factorial_moment,
    mean_busy_period,
    mean_waiting_time,
    mean_waiting_time_batch_inf,
    mean_waiting_time_classical,
    queue_laws,
    saturated_throughput,
    saturated_throughput_finite_n,
    solve_attempt_rate,
    stable_region,
    throughput,
)
from .experiments import (
    ExperimentSpec,
    ResultRow,
    emit_csv,
    parse_config,
    render_config,
    run_experiment,
)
from .lambertw import lambert_w0, lambert_wm1
from .params import BATCH_INF, SystemParams
from .sim import RawMetrics, SimConfig, SlotSimulator, replicate, run, run_saturated
from .stats import (
    DistributionComparison,
    EmptyHistogram,
    Estimate,
    InsufficientSamples,
    compare_qk,
    estimate_throughput,
    estimate_waiting,
)

__version__ = "0.1.0"

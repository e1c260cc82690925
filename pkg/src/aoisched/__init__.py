"""Online AoI + transmission-cost scheduling over ON/OFF channels.

Primal-dual online scheduling (with and without ML predictions), offline
optima, certificate checkers and an experiment harness.
"""

from aoisched.aoi import CostBreakdown, Schedule, as_cost, evaluate_schedule, evolve_aoi
from aoisched.channel import (
    BurstyPatternParams,
    ChannelTrace,
    gen_bernoulli,
    gen_bursty,
    ingest_rsrq,
)
from aoisched.errors import (
    AoiSchedError,
    CapacityError,
    ConversionError,
    IngestionError,
    ParameterError,
)
from aoisched.offline import brute_force_opt, dp_opt
from aoisched.online import (
    LAPDOAScheduler,
    PDOAScheduler,
    follow_prediction_run,
    lapdoa_run,
    pdoa_run,
    srp_run,
)
from aoisched.predictions import (
    Prediction,
    assumed_channel_prediction,
    load_prediction,
    noisy_prediction,
    perfect_prediction,
    save_prediction,
)

__version__ = "0.1.0"

__all__ = [
    "AoiSchedError",
    "BurstyPatternParams",
    "CapacityError",
    "ChannelTrace",
    "ConversionError",
    "CostBreakdown",
    "IngestionError",
    "LAPDOAScheduler",
    "PDOAScheduler",
    "ParameterError",
    "Prediction",
    "Schedule",
    "as_cost",
    "assumed_channel_prediction",
    "brute_force_opt",
    "dp_opt",
    "evaluate_schedule",
    "evolve_aoi",
    "follow_prediction_run",
    "gen_bernoulli",
    "gen_bursty",
    "ingest_rsrq",
    "lapdoa_run",
    "load_prediction",
    "noisy_prediction",
    "pdoa_run",
    "perfect_prediction",
    "save_prediction",
    "srp_run",
]

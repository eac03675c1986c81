"""Election-night forecasting with genetically optimized groupings."""

from .model import (
    Constituency,
    DataError,
    Dataset,
    DeclarationState,
    NONVOTER_CODE,
    ParseError,
    PartySet,
    ValidationError,
    derive_nonvoters,
)
from .dataio import import_csv, load_dataset, save_dataset
from .synth import SynthSpec, generate_synthetic
from .scenario import make_scenario
from .regression import (
    ForecastResult,
    NoDeclaredStationsError,
    TransitionMatrix,
    assemble_forecast,
    estimate_transition,
    global_transition,
    project_station,
    rmse,
    to_elec_shares,
    to_vald_shares,
)
from .ga import (
    ConvergenceTrace,
    GaConfig,
    GroupingChromosome,
    MultirunSummary,
    ablation_study,
    crossover,
    fitness,
    init_population,
    kmeans_baseline,
    multirun_stats,
    mutate,
    next_generation,
    run,
)
from .evaluation import DeviationSummary, GroupProfile, deviation_summary, group_profile

__version__ = "0.1.0"

from .config import ScenarioConfig, component_seed, config_from_dict, load_config
from .experiments import (
    EXPERIMENTS,
    ExperimentReport,
    run_bundling_sweep,
    run_elicit,
    run_figure1,
    run_menu,
    run_section3,
    run_unbiasedness,
)

__all__ = [
    "EXPERIMENTS",
    "ExperimentReport",
    "ScenarioConfig",
    "component_seed",
    "config_from_dict",
    "load_config",
    "run_bundling_sweep",
    "run_elicit",
    "run_figure1",
    "run_menu",
    "run_section3",
    "run_unbiasedness",
]

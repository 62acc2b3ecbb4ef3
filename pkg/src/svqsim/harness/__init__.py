from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import RunManifest, find_level_crossings, run_experiment, run_h2, run_rabi, run_spectrum_sweep

__all__ = ["ConfigError", "ExperimentConfig", "RunManifest", "find_level_crossings", "load_config", "parse_config",
           "run_experiment", "run_h2", "run_rabi", "run_spectrum_sweep"]

"""Configuration loader for the forecasting toolkit."""

import os
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import List, Optional, Union

import yaml

from utils.errors import ConfigError

PROJECT_ROOT = Path(__file__).parent.parent.parent
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "config.yaml"
HYPERPARAMETERS_DIR = PROJECT_ROOT / "config" / "hyperparameters"

MODEL_IDS = ("mordred", "seq2seq-reg", "ar", "gp-mc", "gp-gmm")


@dataclass
class DataConfig:
    """Dataset source and preprocessing."""
    system: Optional[str] = "mackey_glass"
    csv_path: Optional[str] = None
    length: int = 15000
    seasonal_period: Optional[int] = None
    pad_fraction: float = 0.05
    noise_sigma: float = 1e-3


@dataclass
class ModelConfig:
    """Model selection and hyperparameter grids."""
    model_id: str = "mordred"
    lookback: int = 100
    horizon: int = 1000
    decoder_length: Optional[int] = None
    bin_count: int = 300
    hidden_units: List[int] = field(default_factory=lambda: [64, 128, 256, 320])
    dropout: List[float] = field(default_factory=lambda: [0.25, 0.35, 0.5])
    l2: List[float] = field(default_factory=lambda: [1e-6, 1e-7, 1e-8])
    max_epochs: int = 50
    batch_size: int = 256
    patience: int = 5
    clip_norm: float = 5.0
    handoff_dropout: bool = False
    stride: int = 1


@dataclass
class OptimizerConfig:
    """Nadam hyperparameters."""
    learning_rate: float = 0.002
    beta_1: float = 0.9
    beta_2: float = 0.999
    schedule_decay: float = 0.004
    epsilon: float = 1e-7


@dataclass
class ForecastConfig:
    """Predictive sampling."""
    mc_samples: int = 100
    gp_trajectories: int = 100
    quantiles: List[float] = field(default_factory=lambda: [0.025, 0.25, 0.5, 0.75, 0.975])


@dataclass
class BaselineConfig:
    """AR, GP and mixture baselines."""
    ar_orders: List[int] = field(default_factory=lambda: [16, 32, 64])
    ar_obs_variance: float = 1e-6
    gp_restarts: int = 3
    gp_max_windows: int = 2000
    gp_max_iter: int = 200
    gmm_components: int = 5
    gmm_max_iter: int = 500
    gmm_tol: float = 1e-8
    gmm_prune: float = 0.01


@dataclass
class EventsConfig:
    """Event-timing analysis."""
    threshold: float = 0.0
    min_distance: int = 5
    bandwidth: Union[str, float] = "silverman"
    imf_selector: Union[str, int] = "dominant"
    max_imfs: int = 10
    trajectories: int = 100


@dataclass
class ExperimentSection:
    """Run-level settings."""
    seed: int = 7
    output_dir: str = "data"
    workers: int = 1


@dataclass
class StorageConfig:
    """Storage configuration."""
    database_path: Optional[str] = "data/database/runs.db"


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    file: Optional[str] = None


_GRID_FIELDS = {"hidden_units", "dropout", "l2", "ar_orders", "quantiles"}
_TUNED_KEYS = {
    "hidden_units": "model.hidden_units",
    "dropout": "model.dropout",
    "l2": "model.l2",
    "bin_count": "model.bin_count",
    "ar_orders": "baselines.ar_orders",
}


def _build_section(cls, data: Optional[dict], section: str):
    """Instantiate a section dataclass, rejecting unknown keys."""
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in config section '{section}': {unknown}")
    for key in _GRID_FIELDS & set(data):
        if not isinstance(data[key], (list, tuple)):
            data[key] = [data[key]]
        else:
            data[key] = list(data[key])
    return cls(**data)


@dataclass
class Config:
    """Main configuration class (one experiment)."""
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    events: EventsConfig = field(default_factory=EventsConfig)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    storage: StorageConfig = field(default_factory=StorageConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    _SECTIONS = {
        'data': DataConfig,
        'model': ModelConfig,
        'optimizer': OptimizerConfig,
        'forecast': ForecastConfig,
        'baselines': BaselineConfig,
        'events': EventsConfig,
        'experiment': ExperimentSection,
        'storage': StorageConfig,
        'logging': LoggingConfig,
    }

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> 'Config':
        """Build a Config from a (possibly partial) nested mapping."""
        data = data or {}
        unknown = sorted(set(data) - set(cls._SECTIONS))
        if unknown:
            raise ConfigError(f"Unknown config sections: {unknown}")
        config = cls(**{
            name: _build_section(section_cls, data.get(name), name)
            for name, section_cls in cls._SECTIONS.items()
        })
        config.validate()
        return config

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> 'Config':
        """
        Load configuration from a YAML (or JSON) file.

        Args:
            config_path: Path to config file. If None, uses $MORDRED_CONFIG
                or config/config.yaml under the project root.

        Returns:
            Config object with loaded settings.
        """
        if config_path is None:
            config_path = os.environ.get("MORDRED_CONFIG") or DEFAULT_CONFIG_PATH
        config_path = Path(config_path)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_path, 'r') as f:
            data = yaml.safe_load(f)

        config = cls.from_dict(data)
        output_dir = os.environ.get("MORDRED_OUTPUT_DIR")
        if output_dir:
            config.experiment.output_dir = output_dir
        return config

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in self._SECTIONS}

    def save(self, config_path: Optional[str] = None):
        """
        Save configuration to YAML file.

        Args:
            config_path: Path to save config file. If None, uses default location.
        """
        config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        with open(config_path, 'w') as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)

    def apply_overrides(self, overrides: dict) -> 'Config':
        """
        Apply dotted-key overrides such as {'model.lookback': 50}.

        None values are skipped so unset CLI flags leave file values alone.
        """
        data = self.to_dict()
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, _, key = dotted.partition('.')
            if section not in data or key not in data[section]:
                raise ConfigError(f"Unknown config key: {dotted}")
            data[section][key] = value
        return Config.from_dict(data)

    def validate(self):
        """Check cross-field invariants."""
        m = self.model
        if m.model_id not in MODEL_IDS:
            raise ConfigError(f"Unknown model id '{m.model_id}'; valid ids: {list(MODEL_IDS)}")
        if m.lookback < 1 or m.horizon < 1:
            raise ConfigError("lookback and horizon must be >= 1")
        if m.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if m.bin_count < 2:
            raise ConfigError("bin_count must be >= 2")
        if any(not 0.0 <= p < 1.0 for p in m.dropout):
            raise ConfigError(f"dropout rates must lie in [0, 1): {m.dropout}")
        if self.data.csv_path is None and self.data.system is None:
            raise ConfigError("data.system or data.csv_path must be set")
        if self.data.csv_path is not None and not Path(self.data.csv_path).exists():
            raise ConfigError(f"data.csv_path does not exist: {self.data.csv_path}")


def tuned_overrides(model_id: str, system: str, directory: Optional[str] = None) -> dict:
    """
    Dotted overrides pinning a model's grid to the shipped winners for a system.

    Raises:
        ConfigError: no table for the model, or no entry for the system.
    """
    path = Path(directory or HYPERPARAMETERS_DIR) / f"{model_id}.yaml"
    if not path.exists():
        raise ConfigError(f"No tuned hyperparameters for model '{model_id}'")
    with open(path, 'r') as f:
        table = yaml.safe_load(f) or {}
    if system not in table:
        raise ConfigError(f"No tuned hyperparameters for '{model_id}' on '{system}'")
    entry = table[system]
    unknown = sorted(set(entry) - set(_TUNED_KEYS))
    if unknown:
        raise ConfigError(f"Unknown keys in {path.name} for '{system}': {unknown}")
    return {_TUNED_KEYS[key]: value for key, value in entry.items()}

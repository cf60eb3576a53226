"""Registry of synthetic systems loaded from config/systems.yaml."""

from dataclasses import dataclass, field, asdict, replace
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from utils.config import PROJECT_ROOT
from utils.errors import ConfigError

DEFAULT_REGISTRY_PATH = PROJECT_ROOT / "config" / "systems.yaml"
KINDS = ("map", "flow", "delay", "sine")
CHANNELS = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class SystemSpec:
    """Everything needed to reproduce one synthetic series."""
    system_id: str
    kind: str
    params: Dict[str, float] = field(default_factory=dict)
    initial: Tuple[float, ...] = ()
    dt: float = 0.01
    stride: int = 10
    burn_in: int = 0
    channel: str = "x"
    length: int = 15000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"System '{self.system_id}' has unknown kind '{self.kind}'")
        if self.length <= 0:
            raise ConfigError(f"Length must be positive, got {self.length}")
        if self.burn_in < 0:
            raise ConfigError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.kind == "flow" and (self.dt <= 0 or self.stride < 1):
            raise ConfigError(f"Flow '{self.system_id}' needs dt > 0 and stride >= 1")
        if self.channel not in CHANNELS:
            raise ConfigError(f"Unknown channel '{self.channel}'")

    @property
    def channel_index(self) -> int:
        return CHANNELS[self.channel]

    def to_dict(self) -> dict:
        data = asdict(self)
        data["initial"] = list(self.initial)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'SystemSpec':
        data = dict(data)
        data["initial"] = tuple(float(v) for v in data.get("initial", ()))
        data["params"] = dict(data.get("params") or {})
        return cls(**data)


@lru_cache(maxsize=None)
def _load(path: str) -> Dict[str, SystemSpec]:
    with open(path, "r") as f:
        raw = yaml.safe_load(f) or {}
    registry = {}
    for system_id, entry in raw.items():
        entry = dict(entry)
        entry["system_id"] = system_id
        registry[system_id] = SystemSpec.from_dict(entry)
    return registry


def load_registry(path: Optional[str] = None) -> Dict[str, SystemSpec]:
    path = Path(path) if path else DEFAULT_REGISTRY_PATH
    if not path.exists():
        raise FileNotFoundError(f"System registry not found: {path}")
    return dict(_load(str(path)))


def list_systems(path: Optional[str] = None) -> List[str]:
    return sorted(load_registry(path))


def get_system(system_id: str, length: Optional[int] = None, path: Optional[str] = None,
               **overrides) -> SystemSpec:
    """
    Look up a system, optionally replacing its length or other fields.

    Raises:
        ConfigError: unknown id (the message lists the valid ids).
    """
    registry = load_registry(path)
    if system_id not in registry:
        raise ConfigError(f"Unknown system '{system_id}'. Valid systems: {', '.join(sorted(registry))}")
    spec = registry[system_id]
    if length is not None:
        overrides["length"] = int(length)
    if "params" in overrides:
        overrides["params"] = {**spec.params, **overrides["params"]}
    if "initial" in overrides:
        overrides["initial"] = tuple(float(v) for v in overrides["initial"])
    return replace(spec, **overrides) if overrides else spec

"""TOML configuration: chip topology, power model and sensor settings.

Every field is optional in the file; missing ones keep the calibrated
defaults.  ``Config.digest`` hashes the canonical TOML text so reports can
state exactly which constants produced them.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli_w

from .sensor import DtsConfig
from .thermal_model import ChipTopology, ConfigurationError, PowerModel

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

_SECTIONS = {"topology": ChipTopology, "power": PowerModel, "sensor": DtsConfig}


@dataclass(frozen=True)
class Config:
    topology: ChipTopology = field(default_factory=ChipTopology)
    power: PowerModel = field(default_factory=PowerModel)
    sensor: DtsConfig = field(default_factory=DtsConfig)

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()

    def save(self, path) -> Path:
        p = Path(path)
        p.write_text(self.to_toml())
        return p

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
        parts = {}
        for name, kind in _SECTIONS.items():
            section = data.get(name, {})
            allowed = {f.name for f in fields(kind)}
            bad = set(section) - allowed
            if bad:
                raise ConfigurationError(f"unknown keys in [{name}]: {sorted(bad)}")
            try:
                parts[name] = kind(**section)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"[{name}]: {exc}") from exc
        return cls(**parts)

    @classmethod
    def load(cls, path) -> "Config":
        try:
            data = tomllib.loads(Path(path).read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

"""INI configuration: one section per model, keys named after dataclass fields.

Example::

    [photonic]
    waveguide_loss = 100
    [dse]
    lengths_mm = 2.5:160:2.5
    [experiment]
    patterns = FCP-side, FCP-center
    variants = 1x1, 8x4
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import photonic as ph
from .dse import DseGrid
from .electrical import ElectricalCoefficients
from .errors import ConfigurationError
from .selector import HybridCosts, SelectionConstraints
from .sim import SimConfig
from .topology import VARIANTS, MeshSpec
from .traffic import SHIPPED_PATTERNS


@dataclass(frozen=True)
class SelectionSettings:
    total_links: int = 32
    node_links: int = 4
    single_photonic: bool = True

    def constraints(self, snakes: int) -> SelectionConstraints:
        return SelectionConstraints(self.total_links, self.node_links, snakes)


@dataclass(frozen=True)
class ExperimentSettings:
    patterns: tuple = SHIPPED_PATTERNS
    variants: tuple = VARIANTS
    baseline: bool = True
    duration: int = 2000
    seed: int = 1
    rate: float = 0.1  # FCP / uniform per-source rate
    mfm_rate: float = 0.01  # MFM request probability
    injection_rate: float = 0.1  # design point of the per-snake link optimisation
    workers: int = 1


@dataclass(frozen=True)
class Config:
    photonic: ph.PhotonicTechParams = field(default_factory=ph.PhotonicTechParams)
    electrical: ElectricalCoefficients = field(default_factory=ElectricalCoefficients)
    mesh: MeshSpec = field(default_factory=MeshSpec)
    dse: DseGrid = field(default_factory=DseGrid)
    selection: SelectionSettings = field(default_factory=SelectionSettings)
    sim: SimConfig = field(default_factory=SimConfig)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def costs(self) -> HybridCosts:
        s = self.sim
        return HybridCosts(s.hop_cycles, s.ingress_cycles, s.photonic_cycles, s.egress_cycles,
                           self.selection.single_photonic)

    def to_dict(self) -> dict:
        return {f.name: _section_dict(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _section_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = [list(x) if isinstance(x, tuple) else x for x in v] if isinstance(v, tuple) else v
    return out


def _parse_floats(text: str) -> tuple:
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 9) for i in range(count))
    return tuple(float(x) for x in text.replace(",", " ").split())


def _parse_variants(text: str) -> tuple:
    if text.strip().lower() == "all":
        return VARIANTS
    out = []
    for item in text.replace(",", " ").split():
        k, _, s = item.lower().partition("x")
        out.append((int(k), int(s)))
    return tuple(out)


# keys whose INI spelling differs from the field (value converted on read)
_SPECIAL = {
    ("dse", "data_rates_gbps"): ("data_rates", lambda t: tuple(x * 1e9 for x in _parse_floats(t))),
    ("dse", "lengths_mm"): ("lengths", lambda t: tuple(round(x * 1e-3, 9) for x in _parse_floats(t))),
    ("dse", "logical_links"): ("logical_links", lambda t: tuple(int(x) for x in _parse_floats(t))),
    ("dse", "strides"): ("strides", lambda t: tuple(int(x) for x in _parse_floats(t))),
    ("experiment", "patterns"): ("patterns", lambda t: tuple(p.strip() for p in t.split(",") if p.strip())),
    ("experiment", "variants"): ("variants", _parse_variants),
}


def _coerce(section: str, key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if isinstance(default, int) or (default is None and raw.strip().lstrip("-").isdigit()):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if default is None and raw.strip().lower() in ("", "none"):
            return None
    except ValueError:
        raise ConfigurationError(f"[{section}] {key}: cannot parse {raw!r}") from None
    return raw


def _build(section: str, cls, items: dict):
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in items.items():
        special = _SPECIAL.get((section, key))
        if special:
            name, conv = special
            try:
                kwargs[name] = conv(raw)
            except ValueError:
                raise ConfigurationError(f"[{section}] {key}: cannot parse {raw!r}") from None
        elif key in names:
            kwargs[key] = _coerce(section, key, raw, getattr(defaults, key))
        else:
            raise ConfigurationError(f"[{section}] unknown key {key!r}")
    return cls(**kwargs)


_SECTIONS = {f.name: f for f in dataclasses.fields(Config)}


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text)
    kwargs = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigurationError(f"unknown config section [{section}]")
        cls = type(getattr(Config(), section))
        kwargs[section] = _build(section, cls, dict(cp.items(section)))
    return Config(**kwargs)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file {p} not found")
    return parse_config(p.read_text())


def config_from_dict(data: dict) -> Config:
    """Inverse of :meth:`Config.to_dict` (used to replay a manifest)."""
    kwargs = {}
    for name, values in data.items():
        cls = type(getattr(Config(), name))
        fixed = {k: tuple(tuple(x) if isinstance(x, list) else x for x in v) if isinstance(v, list) else v
                 for k, v in values.items()}
        kwargs[name] = cls(**fixed)
    return Config(**kwargs)


__all__ = ["Config", "ExperimentSettings", "SelectionSettings", "config_from_dict",
           "load_config", "parse_config"]

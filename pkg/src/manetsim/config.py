"""Scenario configuration: dataclass blocks, INI round-trip and a stable hash.

An empty INI file yields the base setup.  Each section maps onto one
parameter block; keys are the block's field names.  Routing timers are in
integer microseconds, everything else in SI units.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

from .energy import EnergyParams
from .mac import MacParams
from .mobility import MODELS, MobilityParams, Terrain
from .radio import RadioParams
from .routing import PROTOCOLS, AodvParams, DiscoveryParams, DsrParams, ZrpParams

__version__ = "0.1.0"

DEFAULT_HORIZON = 3600.0


@dataclass(frozen=True)
class TrafficParams:
    packet_size: int = 512
    interval: float = 1.0
    stagger: float = 1.0  # flow start times drawn uniformly in [0, stagger) s


BLOCKS = {
    "terrain": Terrain,
    "mobility": MobilityParams,
    "radio": RadioParams,
    "mac": MacParams,
    "energy": EnergyParams,
    "traffic": TrafficParams,
    "discovery": DiscoveryParams,
    "aodv": AodvParams,
    "dsr": DsrParams,
    "zrp": ZrpParams,
}


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str = "AODV"
    n_nodes: int = 30
    n_connections: int = 6
    seed: int = 1
    horizon: float = DEFAULT_HORIZON
    stop_at_first_death: bool = True
    trace: bool = False
    # optional fixed layout / endpoints, mainly for scripted scenarios
    positions: Optional[tuple[tuple[float, float], ...]] = None
    flows: Optional[tuple[tuple[int, int], ...]] = None
    terrain: Terrain = field(default_factory=Terrain)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    discovery: DiscoveryParams = field(default_factory=DiscoveryParams)
    aodv: AodvParams = field(default_factory=AodvParams)
    dsr: DsrParams = field(default_factory=DsrParams)
    zrp: ZrpParams = field(default_factory=ZrpParams)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {sorted(PROTOCOLS)}")
        if self.n_nodes < 2:
            raise ValueError("need at least 2 nodes")
        if not 0 <= self.n_connections <= self.n_nodes * (self.n_nodes - 1):
            raise ValueError("n_connections out of range")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.mobility.model not in MODELS:
            raise ValueError(f"unknown mobility model {self.mobility.model!r}")
        if self.positions is not None and len(self.positions) != self.n_nodes:
            raise ValueError("positions must list every node")
        if self.flows is not None:
            for s, d in self.flows:
                if s == d or not (0 <= s < self.n_nodes and 0 <= d < self.n_nodes):
                    raise ValueError(f"bad flow {s}->{d}")

    @property
    def routing_params(self):
        block = {"AODV": self.aodv, "DSR": self.dsr, "ZRP": self.zrp}[self.protocol]
        return replace(block, discovery=self.discovery)

    @property
    def zone_radius(self) -> Optional[int]:
        return self.zrp.zone_radius if self.protocol == "ZRP" else None

    def with_(self, **changes) -> "ScenarioConfig":
        """Copy with changes; dotted keys such as ``mobility.pause_time``
        reach into blocks."""
        top: dict[str, Any] = {}
        nested: dict[str, dict[str, Any]] = {}
        for k, v in changes.items():
            k = k.replace("__", ".")
            if "." in k:
                block, name = k.split(".", 1)
                nested.setdefault(block, {})[name] = v
            else:
                top[k] = v
        for block, kv in nested.items():
            top[block] = replace(getattr(self, block), **kv)
        return replace(self, **top)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in BLOCKS:
                d = dataclasses.asdict(v)
                d.pop("discovery", None)
                out[f.name] = d
            elif isinstance(v, tuple):
                out[f.name] = [list(x) for x in v]
            else:
                out[f.name] = v
        return out

    def config_hash(self) -> str:
        """Hash of everything except the seed and output-only switches."""
        d = self.to_dict()
        for k in ("seed", "trace"):
            d.pop(k)
        for k in ("aodv", "dsr", "zrp"):  # only the active protocol's block matters
            if k != self.protocol.lower():
                d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse(text: str, default: Any, name: str) -> Any:
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: not a boolean: {text!r}")
    if default is None:
        return None if text.lower() in ("", "none") else float(text)
    if isinstance(default, int):
        return int(float(text)) if "e" in text.lower() else int(text)
    if isinstance(default, float):
        return float(text)
    return text


def _parse_points(text: str) -> tuple:
    out = []
    for part in text.replace("\n", ";").split(";"):
        part = part.strip()
        if part:
            out.append(tuple(float(x) for x in part.split(",")))
    return tuple(out)


def _parse_pairs(text: str) -> tuple:
    out = []
    for part in text.replace("\n", ";").split(";"):
        part = part.strip()
        if part:
            s, d = part.split("-")
            out.append((int(s), int(d)))
    return tuple(out)


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    return repr(v) if isinstance(v, float) else str(v)


def apply_sections(cfg: ScenarioConfig, parser: configparser.ConfigParser,
                   skip: tuple[str, ...] = ()) -> ScenarioConfig:
    """Overlay INI sections onto ``cfg``.  Unknown sections or keys raise."""
    changes: dict[str, Any] = {}
    for section in parser.sections():
        if section in skip or section.startswith(skip):
            continue
        items = dict(parser.items(section, raw=True))
        if section == "scenario":
            for k, text in items.items():
                if k == "positions":
                    changes[k] = _parse_points(text)
                elif k == "flows":
                    changes[k] = _parse_pairs(text)
                elif k in ("protocol",):
                    changes[k] = text.strip().upper()
                elif k in {f.name for f in fields(ScenarioConfig)} - set(BLOCKS):
                    changes[k] = _parse(text, getattr(cfg, k), k)
                else:
                    raise ValueError(f"unknown key [scenario] {k}")
        elif section in BLOCKS:
            block = getattr(cfg, section)
            names = {f.name for f in fields(block)} - {"discovery"}
            for k, text in items.items():
                if k not in names:
                    raise ValueError(f"unknown key [{section}] {k}")
                changes[f"{section}.{k}"] = _parse(text, getattr(block, k), k)
        else:
            raise ValueError(f"unknown section [{section}]")
    return cfg.with_(**changes)


def load_config(path: str) -> ScenarioConfig:
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return apply_sections(ScenarioConfig(), parser)


def loads_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return apply_sections(ScenarioConfig(), parser)


def dumps_config(cfg: ScenarioConfig) -> str:
    lines = ["[scenario]"]
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in BLOCKS:
            continue
        if f.name == "positions":
            if v is not None:
                lines.append("positions = " + "; ".join(f"{x!r},{y!r}" for x, y in v))
        elif f.name == "flows":
            if v is not None:
                lines.append("flows = " + "; ".join(f"{s}-{d}" for s, d in v))
        else:
            lines.append(f"{f.name} = {_fmt(v)}")
    for name in BLOCKS:
        block = getattr(cfg, name)
        lines.append("")
        lines.append(f"[{name}]")
        for f in fields(block):
            if f.name != "discovery":
                lines.append(f"{f.name} = {_fmt(getattr(block, f.name))}")
    return "\n".join(lines) + "\n"

"""Sweep expansion, parallel execution and CSV / plot-data output."""

from __future__ import annotations

import configparser
import csv
import io
import itertools
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from .config import ScenarioConfig, __version__, _parse, apply_sections
from .simulation import run

CSV_COLUMNS = (
    "config_hash", "seed", "protocol", "n_nodes", "mobility", "pause_s", "max_speed",
    "n_connections", "zone_radius", "network_lifetime_s", "first_dead_node", "delivered",
    "dropped", "ctrl_packets", "tx_J_total", "rx_J_total", "idle_J_total", "status",
)

AXIS_ALIASES = {
    "protocols": "protocol",
    "nodes": "n_nodes",
    "connections": "n_connections",
    "pause": "mobility.pause_time",
    "pause_time": "mobility.pause_time",
    "pause_s": "mobility.pause_time",
    "mobility": "mobility.model",
    "model": "mobility.model",
    "max_speed": "mobility.max_speed",
    "speed": "mobility.max_speed",
    "zone_radius": "zrp.zone_radius",
}

PLOT_ALIASES = {
    "nodes": "n_nodes",
    "connections": "n_connections",
    "pause": "pause_s",
    "pause_time": "pause_s",
    "speed": "max_speed",
}

PROTOCOL_ORDER = ("AODV", "DSR", "ZRP")


@dataclass(frozen=True)
class SweepSpec:
    """Union of cartesian grids over a base config, times ``seeds`` replicates.

    Replicate ``k`` runs with seed ``base_seed + k`` at every point, so all
    protocols and parameter values see the same placements, flows and
    movement (common random numbers).
    """
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    grids: tuple[tuple[tuple[str, tuple], ...], ...] = ((),)
    seeds: int = 1
    base_seed: int = 1

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")


def canonical_axis(key: str) -> str:
    return AXIS_ALIASES.get(key, key)


def expand_sweep(spec: SweepSpec) -> list[ScenarioConfig]:
    """Ordered configs: grid points in declaration order, then replicates.

    A point that appears in more than one grid is run once.
    """
    points: list[ScenarioConfig] = []
    seen: set[str] = set()
    for grid in spec.grids:
        for key, values in grid:
            if len(values) == 0:
                raise ValueError(f"sweep axis {key!r} is empty")
        keys = [canonical_axis(k) for k, _ in grid]
        for combo in itertools.product(*(v for _, v in grid)):
            cfg = spec.base.with_(**dict(zip(keys, combo)))
            h = cfg.config_hash()
            if h not in seen:
                seen.add(h)
                points.append(cfg)
    return [cfg.with_(seed=spec.base_seed + k) for cfg in points for k in range(spec.seeds)]


# -- presets ------------------------------------------------------------------

def preset_grid(name: str, seeds: Optional[int] = None, horizon: float = 1800.0,
               base_seed: int = 1) -> SweepSpec:
    """Named experiment grids.

    ``lifetime``: for 30/40/50 nodes under RWP, connections 6..14 at pause 0
    and pause 0/10/20/30 s at 10 connections.  ``pause``: protocols x nodes x
    pause (36 points).  ``scenarios``: protocols x nodes x mobility model x
    connections, 135 runs per seed; with two seeds that is 90 distinct
    movement/traffic scenarios, each run under all three protocols.
    """
    base = ScenarioConfig(horizon=horizon)
    protocols = ("protocol", PROTOCOL_ORDER)
    nodes = ("n_nodes", (30, 40, 50))
    conns = ("n_connections", (6, 8, 10, 12, 14))
    pauses = ("mobility.pause_time", (0.0, 10.0, 20.0, 30.0))
    if name == "lifetime":
        grids = ((nodes, ("mobility.pause_time", (0.0,)), conns, protocols),
                 (nodes, ("n_connections", (10,)), pauses, protocols))
        return SweepSpec(base, grids, 10 if seeds is None else seeds, base_seed)
    if name == "pause":
        return SweepSpec(base.with_(n_connections=10), ((protocols, nodes, pauses),),
                         1 if seeds is None else seeds, base_seed)
    if name == "scenarios":
        grid = (protocols, nodes, ("mobility.model", ("rwp", "group", "none")), conns)
        return SweepSpec(base, (grid,), 1 if seeds is None else seeds, base_seed)
    raise ValueError(f"unknown preset {name!r}; choose lifetime, pause or scenarios")


def _axis_value(cfg: ScenarioConfig, key: str) -> Any:
    obj: Any = cfg
    for part in key.split("."):
        obj = getattr(obj, part)
    return obj


def load_sweep(path: str) -> SweepSpec:
    """Read a sweep file.

    ``[sweep]`` holds ``seeds``, ``base_seed`` and optionally ``preset``.
    Every ``[grid...]`` section is one cartesian grid of comma-separated
    axis values.  Any other section overrides the base config.
    """
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return sweep_from_parser(parser)


def loads_sweep(text: str) -> SweepSpec:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return sweep_from_parser(parser)


def sweep_from_parser(parser: configparser.ConfigParser) -> SweepSpec:
    meta = dict(parser.items("sweep")) if parser.has_section("sweep") else {}
    seeds = int(meta["seeds"]) if "seeds" in meta else None
    base_seed = int(meta.get("base_seed", 1))
    if "preset" in meta:
        spec = preset_grid(meta["preset"].strip(), seeds, base_seed=base_seed)
        base = apply_sections(spec.base, parser, skip=("sweep", "grid"))
        return SweepSpec(base, spec.grids, spec.seeds, base_seed)
    base = apply_sections(ScenarioConfig(), parser, skip=("sweep", "grid"))
    grids = []
    for section in parser.sections():
        if not section.startswith("grid"):
            continue
        axes = []
        for k, text in parser.items(section, raw=True):
            key = canonical_axis(k)
            default = _axis_value(base, key)
            vals = tuple(_parse_axis_value(v, default, key) for v in text.split(",") if v.strip())
            if not vals:
                raise ValueError(f"sweep axis {k!r} is empty")
            axes.append((key, vals))
        grids.append(tuple(axes))
    return SweepSpec(base, tuple(grids) or ((),), 1 if seeds is None else seeds, base_seed)


def _parse_axis_value(text: str, default: Any, key: str) -> Any:
    if key == "protocol":
        return text.strip().upper()
    return _parse(text, default, key)


# -- running ------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    return f"{x:.6f}"


def run_row(cfg: ScenarioConfig) -> tuple[dict[str, str], dict[str, Any]]:
    """Run one config; returns its CSV row and a JSON detail record.

    Failures become rows with an ``error`` status instead of raising.
    """
    row = {
        "config_hash": cfg.config_hash(),
        "seed": str(cfg.seed),
        "protocol": cfg.protocol,
        "n_nodes": str(cfg.n_nodes),
        "mobility": cfg.mobility.model,
        "pause_s": _fmt_float(cfg.mobility.pause_time),
        "max_speed": _fmt_float(cfg.mobility.max_speed),
        "n_connections": str(len(cfg.flows) if cfg.flows is not None else cfg.n_connections),
        "zone_radius": "" if cfg.zone_radius is None else str(cfg.zone_radius),
    }
    try:
        st = run(cfg)
    except Exception as exc:  # recorded, the sweep continues
        row.update({c: "" for c in CSV_COLUMNS if c not in row})
        row["status"] = f"error:{type(exc).__name__}"
        return row, {"config_hash": row["config_hash"], "seed": cfg.seed,
                     "error": f"{type(exc).__name__}: {exc}"}
    died = bool(st.death_times)
    row.update({
        "network_lifetime_s": _fmt_float(st.network_lifetime if died else cfg.horizon),
        "first_dead_node": "" if st.first_dead_node is None else str(st.first_dead_node),
        "delivered": str(st.delivered),
        "dropped": str(st.dropped),
        "ctrl_packets": str(st.counters.get("ctrl_packets", 0)),
        "tx_J_total": _fmt_float(st.energy_total("tx")),
        "rx_J_total": _fmt_float(st.energy_total("rx")),
        "idle_J_total": _fmt_float(st.energy_total("idle")),
        "status": "ok" if died else "horizon",
    })
    detail = {
        "config_hash": row["config_hash"], "seed": cfg.seed, "protocol": cfg.protocol,
        "flows": st.flows, "death_times": {str(k): v for k, v in st.death_times.items()},
        "offered": st.offered, "in_flight": st.in_flight, "counters": st.counters,
        "warnings": st.warnings, "events": st.events, "trace_hash": st.trace_hash,
    }
    return row, detail


@dataclass
class SweepResult:
    rows: list[dict[str, str]]
    details: list[dict[str, Any]]
    configs: list[ScenarioConfig]

    @property
    def n_errors(self) -> int:
        return sum(1 for r in self.rows if r["status"].startswith("error"))


def run_configs(configs: Sequence[ScenarioConfig], jobs: int = 1) -> SweepResult:
    """Run independent configs; result order follows ``configs`` whatever ``jobs`` is."""
    configs = list(configs)
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(run_row, configs, chunksize=max(1, len(configs) // (4 * jobs))))
    else:
        out = [run_row(c) for c in configs]
    return SweepResult([r for r, _ in out], [d for _, d in out], configs)


def provenance(configs: Sequence[ScenarioConfig], extra: Iterable[str] = ()) -> list[str]:
    hashes = sorted({c.config_hash() for c in configs})
    seeds = sorted({c.seed for c in configs})
    lines = [
        f"manetsim version {__version__}",
        f"runs: {len(configs)}; distinct configs: {len(hashes)}; seeds: {seeds}",
        "configs: full parameter sets keyed by config_hash in configs.jsonl",
        "lifetime: first battery exhaustion; status=horizon means no node died "
        "and network_lifetime_s holds the horizon",
    ]
    for radio in sorted({c.radio for c in configs}, key=repr):
        lines.append(f"radio: nominal range {radio.nominal_range:g} m at {radio.radiated_power * 1e3:.4f} mW "
                     f"radiated, rx threshold {radio.rx_threshold:.4g} W")
    horizons = sorted({c.horizon for c in configs})
    lines.append("horizon (s): " + ", ".join(f"{h:g}" for h in horizons)
                 + " (configurable; lifetime is censored at the horizon)")
    lines.extend(extra)
    return lines


def format_csv(rows: Sequence[dict[str, str]], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_results(result: SweepResult, out_dir: str, name: str = "results") -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w") as fh:
        fh.write(format_csv(result.rows, provenance(result.configs)))
    seen = set()
    with open(os.path.join(out_dir, "configs.jsonl"), "w") as fh:
        for cfg in result.configs:
            h = cfg.config_hash()
            if h not in seen:
                seen.add(h)
                d = cfg.to_dict()
                d.pop("seed")
                fh.write(json.dumps({"config_hash": h, "config": d}, sort_keys=True,
                                    default=repr) + "\n")
    with open(os.path.join(out_dir, f"{name}.runs.jsonl"), "w") as fh:
        for d in result.details:
            fh.write(json.dumps(d, sort_keys=True) + "\n")
    return path


def run_sweep(spec: SweepSpec, jobs: int = 1, out_dir: Optional[str] = None) -> SweepResult:
    result = run_configs(expand_sweep(spec), jobs)
    if out_dir is not None:
        write_results(result, out_dir)
    return result


# -- plot data ------------------------------------------------------------------

def read_results(path: str) -> list[dict[str, str]]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _num(text: str) -> Any:
    try:
        return float(text)
    except ValueError:
        return text


def emit_plotdata(rows: Sequence[dict[str, str]], group_by: dict[str, str], axis: str) -> str:
    """Mean lifetime against ``axis``, one column group per protocol.

    ``group_by`` filters rows by exact column values (numeric columns compare
    numerically).  Error rows are ignored.
    """
    axis = PLOT_ALIASES.get(axis, axis)
    if not rows:
        raise ValueError("no result rows")
    if axis not in rows[0]:
        raise ValueError(f"unknown axis {axis!r}; columns are {', '.join(CSV_COLUMNS)}")
    filters = {}
    for k, v in group_by.items():
        k = PLOT_ALIASES.get(k, k)
        if k not in rows[0]:
            raise ValueError(f"unknown group-by column {k!r}")
        filters[k] = _num(v)
    sel = [r for r in rows if not r["status"].startswith("error")
           and all(_num(r[k]) == v for k, v in filters.items())]
    if not sel:
        raise ValueError(f"no rows match {group_by}")
    protocols = [p for p in PROTOCOL_ORDER if any(r["protocol"] == p for r in sel)]
    protocols += sorted({r["protocol"] for r in sel} - set(protocols))
    xs = sorted({_num(r[axis]) for r in sel}, key=lambda x: (isinstance(x, str), x))
    head = [axis]
    for p in protocols:
        head += [f"{p}_mean", f"{p}_std", f"{p}_n"]
    out = ["\t".join(head)]
    for x in xs:
        cells = [x if isinstance(x, str) else f"{x:g}"]
        for p in protocols:
            vals = [float(r["network_lifetime_s"]) for r in sel
                    if r["protocol"] == p and _num(r[axis]) == x]
            if vals:
                sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
                cells += [f"{statistics.fmean(vals):.6f}", f"{sd:.6f}", str(len(vals))]
            else:
                cells += ["nan", "nan", "0"]
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


def mean_lifetimes(rows: Sequence[dict[str, str]], keys: Sequence[str]) -> dict[tuple, float]:
    """Mean ``network_lifetime_s`` per distinct tuple of ``keys`` columns."""
    acc: dict[tuple, list[float]] = {}
    for r in rows:
        if r["status"].startswith("error"):
            continue
        acc.setdefault(tuple(r[k] for k in keys), []).append(float(r["network_lifetime_s"]))
    return {k: statistics.fmean(v) for k, v in acc.items()}

"""Discrete-event MANET simulator for comparing routing protocols by network lifetime."""

from .config import ScenarioConfig, __version__, load_config
from .simulation import Simulation, run

__all__ = ["ScenarioConfig", "Simulation", "run", "load_config", "__version__"]

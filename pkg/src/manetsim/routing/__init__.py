"""Routing protocols, looked up by name."""

from .aodv import Aodv, AodvParams
from .base import DiscoveryParams, RoutingAgent
from .dsr import Dsr, DsrParams
from .zrp import Zrp, ZrpParams

PROTOCOLS = {"AODV": Aodv, "DSR": Dsr, "ZRP": Zrp}

__all__ = ["Aodv", "AodvParams", "Dsr", "DsrParams", "Zrp", "ZrpParams", "DiscoveryParams",
           "RoutingAgent", "PROTOCOLS"]

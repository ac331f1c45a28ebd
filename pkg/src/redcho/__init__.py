"""Robust exact dynamic consensus of high order: protocol algebra, network
dynamics, an explicit Euler simulator with network events, and a scenario CLI."""

from .algebra import ProtocolMatrices, ProtocolParams, example1_params, verify_similarity
from .dynamics import output_map, redcho_rhs
from .graph import Network, complete, from_edge_list, path, ring, star
from .signals import SignalBank, cosine_bank, estimate_L, example1_bank, random_cosine_bank
from .sim import Event, InitPolicy, ResetAgent, SetSignals, SwapGraph, Trajectory, euler_run, settling_time

__version__ = "0.1.0"

__all__ = [
    "Event", "InitPolicy", "Network", "ProtocolMatrices", "ProtocolParams", "ResetAgent", "SetSignals",
    "SignalBank", "SwapGraph", "Trajectory", "complete", "cosine_bank", "estimate_L", "euler_run",
    "example1_bank", "example1_params", "from_edge_list", "output_map", "path", "random_cosine_bank", "redcho_rhs", "ring",
    "settling_time", "star", "verify_similarity",
]

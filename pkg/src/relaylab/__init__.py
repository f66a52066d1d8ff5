"""Throughput and relay-queue analysis for a full-duplex cooperative relay
serving random-access users over Rayleigh-fading links."""
from .scenario import AccessConfig, PhyConfig, Scenario, Topology, table_one

__all__ = ["AccessConfig", "PhyConfig", "Scenario", "Topology", "table_one"]

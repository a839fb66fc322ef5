"""Deterministic simulator of NS-referral amplification against recursive DNS resolvers."""

from __future__ import annotations

from .metrics import AttackReport, CostModelInput, attacker_cost, firepower, predicted_victim_cost
from .names import DomainName, classify_bailiwick, is_subordinate, name
from .scenario import AttackScenario, run_attack

__all__ = [
    "AttackReport",
    "AttackScenario",
    "CostModelInput",
    "DomainName",
    "attacker_cost",
    "classify_bailiwick",
    "firepower",
    "is_subordinate",
    "name",
    "predicted_victim_cost",
    "run_attack",
]
__version__ = "0.1.0"

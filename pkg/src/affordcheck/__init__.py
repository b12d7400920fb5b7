"""Embodied affordance verification of action plans in 3D indoor scenes."""

from affordcheck.engine import DiagnosticReport, VerificationConfig, ground_plan, summarize
from affordcheck.scene import BUILTIN_PROFILES, AgentProfile, AtomicAction, Plan, PlanStep, PropertyKind, Scene

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROFILES",
    "AgentProfile",
    "AtomicAction",
    "DiagnosticReport",
    "Plan",
    "PlanStep",
    "PropertyKind",
    "Scene",
    "VerificationConfig",
    "ground_plan",
    "summarize",
]

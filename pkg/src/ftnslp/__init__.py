"""Symbol-level precoded faster-than-Nyquist transmit-block designer.

Designs MIMO downlink blocks that minimize the radar channel-estimation
MMSE subject to per-user constructive-interference QoS and transmit-energy
constraints, and reproduces the associated convergence and tradeoff
experiments at desk scale.
"""

from .channel import CommChannel, Dimensions, EffectiveChannel, SensingPrior
from .ci import CISystem, EnergyForm, SymbolBlock
from .pulse import PulseSpec, PulseTables
from .sim import MetricsRecord, ScenarioConfig
from .solver import DesignProblem, QcqpProblem, QpProblem, Solution, SolveReport

__all__ = [
    "CISystem",
    "CommChannel",
    "DesignProblem",
    "Dimensions",
    "EffectiveChannel",
    "EnergyForm",
    "MetricsRecord",
    "PulseSpec",
    "PulseTables",
    "QcqpProblem",
    "QpProblem",
    "ScenarioConfig",
    "SensingPrior",
    "Solution",
    "SolveReport",
    "SymbolBlock",
]

__version__ = "0.1.0"

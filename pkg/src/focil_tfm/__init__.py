"""Transaction fee mechanisms with inclusion-list committees, in exact arithmetic."""

__version__ = "0.1.0"

from .core import (
    DoubleBid,
    GameState,
    PrioritizedBid,
    ScenarioParams,
    SingleBid,
    TfmKind,
    Transaction,
    block_valid,
    bp_fee,
    build_l_bp,
    build_l_cm,
    cm_fee,
    inclusion_vector,
    money,
)
from .scenario import Scenario, StrategySpace, generate_scenario, load_scenario, parse_scenario, render_scenario

__all__ = [
    "DoubleBid",
    "GameState",
    "PrioritizedBid",
    "Scenario",
    "ScenarioParams",
    "SingleBid",
    "StrategySpace",
    "TfmKind",
    "Transaction",
    "block_valid",
    "bp_fee",
    "build_l_bp",
    "build_l_cm",
    "cm_fee",
    "generate_scenario",
    "inclusion_vector",
    "load_scenario",
    "money",
    "parse_scenario",
    "render_scenario",
]

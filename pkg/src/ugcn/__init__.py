"""Topology-transferable graph learning for power grids.

One complex-valued spatio-temporal graph network, trained across sampled
reconfigurations of a base system, forecasts voltage phasors and localizes
stealth false-data injections on topologies it has never seen, with a
parameter set whose shapes are independent of system size.
"""

from .caseio import CaseFile, load_case, parse_case, to_grid_graph
from .errors import UgcnError
from .fdi import AttackScenario, build_stealth_attack, inject, sample_attack_config
from .grid import Branch, GridGraph, Gso, build_admittance, build_gso, regularized_solve
from .model import (
    LayerConfig,
    UgcnParams,
    conv_forward,
    fdi_config,
    forecast_config,
    head_forward,
    init_params,
    model_backward,
    model_forward,
    pool_custom,
    pool_learnable,
)
from .powerflow import nodal_mismatch, solve_powerflow
from .reconfig import AugmentConfig, apply_op, augment, transmission_augment
from .scenarios import (
    ProfileSet,
    ScenarioConfig,
    ScenarioSet,
    build_features,
    build_scenario,
    ingest_profiles_csv,
    synth_profiles,
)
from .training import (
    Adam,
    MetricsReport,
    TrainConfig,
    UgcnPredictor,
    eval_fdi,
    eval_forecast,
    loss_fdi,
    loss_forecast,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AttackScenario", "AugmentConfig", "Adam", "Branch", "CaseFile", "GridGraph",
    "Gso", "LayerConfig", "MetricsReport", "ProfileSet", "ScenarioConfig",
    "ScenarioSet", "TrainConfig", "UgcnError", "UgcnParams", "UgcnPredictor",
    "apply_op", "augment", "build_admittance", "build_features", "build_gso",
    "build_scenario", "build_stealth_attack", "conv_forward", "eval_fdi",
    "eval_forecast", "fdi_config", "forecast_config", "head_forward",
    "ingest_profiles_csv", "init_params", "inject", "load_case", "loss_fdi",
    "loss_forecast", "model_backward", "model_forward", "nodal_mismatch",
    "parse_case", "pool_custom", "pool_learnable", "regularized_solve",
    "sample_attack_config", "solve_powerflow", "synth_profiles",
    "to_grid_graph", "train", "transmission_augment",
]

"""Assistive multi-armed bandits with observable reward classes and a CPT-biased human."""

from .bandit import (BanditInstance, RewardClass, RewardStream, StreamExhausted, ValidationError,
                     make_reference_instances, pull, sample_stream)
from .cpt import REFERENCE_PARAMS, CptParams, Prospect, cpt_value
from .harness import ExperimentConfig, ExperimentSummary, run_experiment
from .optim import MinimizeOptions, MinimizeResult, powell_minimize
from .policies import RobotConfig, RobotPolicy

__version__ = "0.1.0"

#!/usr/bin/env python
# encoding: utf-8

"""NavPPO: network, PPO training and the model file"""

from .network import (
    LearnerException,
    ShapeMismatchException,
    NetworkArch,
    NavPPO,
    LstmState,
    make_features,
    mc_forward_stats,
    softmax,
)
from .ppo import (
    LengthMismatchException,
    DegeneratePolicyException,
    NonFiniteLossException,
    PpoConfig,
    PpoTrainer,
    Transition,
    TransitionBuffer,
    gae,
    ppo_loss,
)
from .model_file import (
    ModelFileException,
    VersionMismatchException,
    CorruptFileException,
    save_params,
    load_params,
)

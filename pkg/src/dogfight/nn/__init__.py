"""From-scratch dense autodiff and the three policy network architectures."""

from .autodiff import Tensor, backward_from
from .networks import (
    ActorOutput,
    InstanceSpec,
    NetworkConfig,
    PolicyNetwork,
    commander_config,
    ctce_config,
    escape_config,
    fight_config,
    sample_action,
)
from .params import (
    ParamStore,
    adam_step,
    file_sha256,
    load_checkpoint,
    orthogonal_init,
    save_checkpoint,
)

__all__ = [
    "ActorOutput",
    "InstanceSpec",
    "NetworkConfig",
    "ParamStore",
    "PolicyNetwork",
    "Tensor",
    "adam_step",
    "backward_from",
    "commander_config",
    "ctce_config",
    "escape_config",
    "fight_config",
    "file_sha256",
    "load_checkpoint",
    "orthogonal_init",
    "sample_action",
    "save_checkpoint",
]

"""Adapter exposing a Habitat-Lab environment over the simulator wire protocol."""

from habitat_bridge.config import BridgeConfig
from habitat_bridge.env import (
    ACTION_TO_ENV,
    ENV_TO_ACTION,
    AssetMissingError,
    BridgeError,
    EnvObservation,
    EpisodeNotFoundError,
    UnknownActionNameError,
    to_env_action,
    to_harness_action,
)
from habitat_bridge.frames import encode_frame
from habitat_bridge.service import BridgeService, make_tcp_server, serve_stdio

__version__ = "0.1.0"

__all__ = [
    "ACTION_TO_ENV",
    "ENV_TO_ACTION",
    "AssetMissingError",
    "BridgeConfig",
    "BridgeError",
    "BridgeService",
    "EnvObservation",
    "EpisodeNotFoundError",
    "UnknownActionNameError",
    "encode_frame",
    "make_tcp_server",
    "serve_stdio",
    "to_env_action",
    "to_harness_action",
]

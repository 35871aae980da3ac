"""Built-in continuous 2D occupancy-grid simulator with a raycast renderer."""

from vlnkit.simworld.maps import (
    MapError,
    MapNotFoundError,
    OpenBorderError,
    RaggedRowsError,
    UnknownCharacterError,
    WorldMap,
    load_map,
    load_map_file,
)
from vlnkit.simworld.engine import (
    LocalSimulator,
    MotionParams,
    Observation,
    SimState,
    Simulator,
    StartInWallError,
    StepResult,
    StopNotASimActionError,
    apply_action,
    cast_ray,
)
from vlnkit.simworld.render import FRAME_SIZE, PoseInWallError, render
from vlnkit.simworld.geodesic import UnreachableError, geodesic_distance, shortest_cell_path

__all__ = [
    "FRAME_SIZE",
    "LocalSimulator",
    "MapError",
    "MapNotFoundError",
    "MotionParams",
    "Observation",
    "OpenBorderError",
    "PoseInWallError",
    "RaggedRowsError",
    "SimState",
    "Simulator",
    "StartInWallError",
    "StepResult",
    "StopNotASimActionError",
    "UnknownCharacterError",
    "UnreachableError",
    "WorldMap",
    "apply_action",
    "cast_ray",
    "geodesic_distance",
    "load_map",
    "load_map_file",
    "render",
    "shortest_cell_path",
]

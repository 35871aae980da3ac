"""Column raycast renderer: flat-shaded wall slabs over a 90-degree FOV."""

from __future__ import annotations

import numpy as np

from vlnkit.core import Pose
from vlnkit.simworld.engine import Observation, cast_ray
from vlnkit.simworld.maps import WorldMap

FRAME_SIZE = 256
FOV_DEGREES = 90.0

CEILING_RGB = (198, 198, 198)
FLOOR_RGB = (42, 42, 42)

# Slab half-height in pixels is _HALF_FRAME * WALL_SCALE / distance, so a
# wall one meter away fills the whole frame column.
WALL_SCALE = 1.0
_HALF_FRAME = FRAME_SIZE // 2


class PoseInWallError(ValueError):
    """Render was asked for a viewpoint inside a wall cell."""


def render(world: WorldMap, pose: Pose, step: int = 0) -> Observation:
    """Render the 256x256 view from `pose`.

    One ray per column, leftmost column at +FOV/2 relative heading. Wall
    slabs shrink with ray hit distance; rays through vertical faces are
    darkened slightly so corners read in the image. Deterministic:
    identical (map, pose) gives identical bytes.
    """
    if not world.is_free_point(pose.x, pose.y):
        raise PoseInWallError(f"viewpoint ({pose.x}, {pose.y}) is inside a wall cell")

    frame = np.empty((FRAME_SIZE, FRAME_SIZE, 3), dtype=np.uint8)
    frame[:_HALF_FRAME] = CEILING_RGB
    frame[_HALF_FRAME:] = FLOOR_RGB

    for col in range(FRAME_SIZE):
        rel = FOV_DEGREES / 2.0 - (col + 0.5) * FOV_DEGREES / FRAME_SIZE
        dist, cell, side = cast_ray(world, pose.x, pose.y, pose.heading + rel)
        half = int(_HALF_FRAME * WALL_SCALE / max(dist, 1e-9))
        half = min(half, _HALF_FRAME)
        if half <= 0:
            continue
        r, g, b = world.wall_color(*cell)
        if side == 0:
            r, g, b = (r * 4) // 5, (g * 4) // 5, (b * 4) // 5
        frame[_HALF_FRAME - half : _HALF_FRAME + half, col] = (r, g, b)

    return Observation(frame=frame, step=step)

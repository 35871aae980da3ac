import math
import random

import pytest

from vlnkit import fixtures
from vlnkit.core import load_episodes
from vlnkit.simworld.maps import WorldMap, load_map

# 12x12 grid of 1 m cells: a closed 10x10 m open room.
OPEN_ROOM_TEXT = "cell_size=1\n" + "\n".join(
    ["#" * 12] + ["#" + "." * 10 + "#" for _ in range(10)] + ["#" * 12]
)

# Default 0.25 m cells, one interior wall block for collision tests.
BLOCK_ROOM_TEXT = "\n".join(
    [
        "##########",
        "#........#",
        "#........#",
        "#...##...#",
        "#...##...#",
        "#........#",
        "#........#",
        "##########",
    ]
)


@pytest.fixture()
def open_room() -> WorldMap:
    return load_map(OPEN_ROOM_TEXT)


@pytest.fixture()
def block_room() -> WorldMap:
    return load_map(BLOCK_ROOM_TEXT)


@pytest.fixture(scope="session")
def bundled_episodes():
    return load_episodes(fixtures.episode_set_path())


@pytest.fixture(scope="session")
def bundled_map_root():
    return fixtures.fixtures_root()


def random_free_point(world: WorldMap, rng: random.Random) -> tuple[float, float]:
    """Uniform point inside a uniformly chosen free cell."""
    cells = world.free_cells()
    row, col = cells[rng.randrange(len(cells))]
    s = world.cell_size
    return ((col + rng.random()) * s, (row + rng.random()) * s)


def euclid(a, b) -> float:
    return math.dist(a, b)

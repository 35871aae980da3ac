"""ASCII occupancy-grid maps: '#' walls, '.' free space, closed border."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WALL_CHAR = "#"
FREE_CHAR = "."

# Flat-shaded render palette; wall cells without an explicit color pick one
# of these by a coordinate hash so adjacent walls stay distinguishable.
PALETTE: tuple[tuple[int, int, int], ...] = (
    (178, 34, 34),    # brick red
    (46, 110, 166),   # steel blue
    (186, 154, 46),   # ochre
    (58, 140, 74),    # green
    (136, 86, 167),   # violet
    (196, 104, 44),   # rust orange
    (84, 150, 150),   # teal
    (150, 112, 88),   # tan
)


class MapError(ValueError):
    """Base class for map parsing and validation failures."""


class RaggedRowsError(MapError):
    """Rows of the ASCII grid are not all the same length."""


class OpenBorderError(MapError):
    """A border cell is not a wall; the world must be closed."""


class UnknownCharacterError(MapError):
    """The ASCII grid contains a character other than '#' or '.'."""


class MapNotFoundError(MapError):
    """A referenced map file does not exist."""


@dataclass
class WorldMap:
    """Rectangular occupancy grid. grid[row, col] is True for wall cells.

    World coordinates: x runs along columns, y along rows, both in meters;
    cell (row, col) covers [col*s, (col+1)*s) x [row*s, (row+1)*s) for
    cell_size s.
    """

    grid: np.ndarray
    cell_size: float = 0.25
    wall_colors: dict[tuple[int, int], tuple[int, int, int]] = field(default_factory=dict)
    source: str = ""

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=bool)
        if self.grid.ndim != 2:
            raise MapError("map grid must be two-dimensional")
        rows, cols = self.grid.shape
        if rows < 3 or cols < 3:
            raise MapError(f"map must be at least 3x3 cells, got {rows}x{cols}")
        if self.cell_size <= 0:
            raise MapError(f"cell_size must be positive, got {self.cell_size}")
        border = np.concatenate(
            [self.grid[0, :], self.grid[-1, :], self.grid[:, 0], self.grid[:, -1]]
        )
        if not border.all():
            raise OpenBorderError("map border must be all walls")

    @property
    def rows(self) -> int:
        return self.grid.shape[0]

    @property
    def cols(self) -> int:
        return self.grid.shape[1]

    @property
    def width(self) -> float:
        return self.cols * self.cell_size

    @property
    def height(self) -> float:
        return self.rows * self.cell_size

    def is_wall(self, row: int, col: int) -> bool:
        if 0 <= row < self.rows and 0 <= col < self.cols:
            return bool(self.grid[row, col])
        return True  # outside the closed border counts as wall

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(y // self.cell_size), int(x // self.cell_size))

    def is_free_point(self, x: float, y: float) -> bool:
        row, col = self.cell_of(x, y)
        return not self.is_wall(row, col)

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return ((col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size)

    def cell_origin(self, row: int, col: int) -> tuple[float, float]:
        return (col * self.cell_size, row * self.cell_size)

    def wall_color(self, row: int, col: int) -> tuple[int, int, int]:
        explicit = self.wall_colors.get((row, col))
        if explicit is not None:
            return explicit
        return PALETTE[(row * 31 + col * 17) % len(PALETTE)]

    def free_cells(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(~self.grid)
        return list(zip(rows.tolist(), cols.tolist()))


def load_map(text: str) -> WorldMap:
    """Parse an ASCII grid, with an optional leading 'cell_size=<m>' header."""
    lines = [line for line in text.splitlines() if line.strip() != ""]
    if not lines:
        raise MapError("empty map text")

    cell_size = 0.25
    if lines[0].startswith("cell_size="):
        try:
            cell_size = float(lines[0].split("=", 1)[1])
        except ValueError as exc:
            raise MapError(f"bad cell_size header: {lines[0]!r}") from exc
        lines = lines[1:]
        if not lines:
            raise MapError("map has a header but no grid rows")

    width = len(lines[0])
    rows = []
    for idx, line in enumerate(lines):
        if len(line) != width:
            raise RaggedRowsError(
                f"row {idx} has length {len(line)}, expected {width}"
            )
        row = []
        for ch in line:
            if ch == WALL_CHAR:
                row.append(True)
            elif ch == FREE_CHAR:
                row.append(False)
            else:
                raise UnknownCharacterError(f"unknown map character {ch!r} in row {idx}")
        rows.append(row)

    return WorldMap(grid=np.array(rows, dtype=bool), cell_size=cell_size)


def load_map_file(path: str | Path) -> WorldMap:
    path = Path(path)
    if not path.is_file():
        raise MapNotFoundError(f"map file not found: {path}")
    world = load_map(path.read_text(encoding="utf-8"))
    world.source = str(path)
    return world

"""Shortest obstacle-avoiding distances on the free-cell graph.

The graph is 8-connected over free cells: straight moves cost one cell
size, diagonal moves cost sqrt(2) times that, and a diagonal is allowed
only when both flanking orthogonal cells are free (no corner cutting).
Point-to-point distance is the cell-graph distance between the two
containing cells plus each endpoint's offset from its cell origin; two
points in the same cell are connected by the straight segment.
"""

from __future__ import annotations

import heapq
import math

from vlnkit.simworld.maps import WorldMap

SQRT2 = math.sqrt(2.0)

_STRAIGHT = ((0, 1), (0, -1), (1, 0), (-1, 0))
_DIAGONAL = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class UnreachableError(ValueError):
    """No free path exists between the two query points."""


def neighbors(world: WorldMap, row: int, col: int) -> list[tuple[tuple[int, int], float]]:
    """Free 8-neighborhood of a cell with move costs in meters."""
    out = []
    s = world.cell_size
    for dr, dc in _STRAIGHT:
        nr, nc = row + dr, col + dc
        if not world.is_wall(nr, nc):
            out.append(((nr, nc), s))
    for dr, dc in _DIAGONAL:
        nr, nc = row + dr, col + dc
        if world.is_wall(nr, nc):
            continue
        if world.is_wall(row, nc) or world.is_wall(nr, col):
            continue  # would squeeze through a wall corner
        out.append(((nr, nc), s * SQRT2))
    return out


def _dijkstra(
    world: WorldMap, start: tuple[int, int], goal: tuple[int, int] | None = None
) -> tuple[dict[tuple[int, int], float], dict[tuple[int, int], tuple[int, int]]]:
    dist: dict[tuple[int, int], float] = {start: 0.0}
    prev: dict[tuple[int, int], tuple[int, int]] = {}
    heap: list[tuple[float, int, int]] = [(0.0, start[0], start[1])]
    done: set[tuple[int, int]] = set()
    while heap:
        d, row, col = heapq.heappop(heap)
        cell = (row, col)
        if cell in done:
            continue
        done.add(cell)
        if goal is not None and cell == goal:
            break
        for ncell, cost in neighbors(world, row, col):
            nd = d + cost
            if nd < dist.get(ncell, math.inf):
                dist[ncell] = nd
                prev[ncell] = cell
                heapq.heappush(heap, (nd, ncell[0], ncell[1]))
    return dist, prev


def _checked_cell(world: WorldMap, point: tuple[float, float], name: str) -> tuple[int, int]:
    cell = world.cell_of(point[0], point[1])
    if world.is_wall(*cell):
        raise UnreachableError(f"{name} point {point} lies in a wall cell {cell}")
    return cell


def geodesic_distance(world: WorldMap, a: tuple[float, float], b: tuple[float, float]) -> float:
    """Shortest free-path length in meters between two points."""
    cell_a = _checked_cell(world, a, "start")
    cell_b = _checked_cell(world, b, "end")
    if cell_a == cell_b:
        return math.dist(a, b)
    dist, _ = _dijkstra(world, cell_a, goal=cell_b)
    if cell_b not in dist:
        raise UnreachableError(f"no free path between cells {cell_a} and {cell_b}")
    offset_a = math.dist(a, world.cell_origin(*cell_a))
    offset_b = math.dist(b, world.cell_origin(*cell_b))
    return dist[cell_b] + offset_a + offset_b


def shortest_cell_path(
    world: WorldMap, start: tuple[int, int], goal: tuple[int, int]
) -> list[tuple[int, int]]:
    """Cell sequence of a shortest path, endpoints included."""
    if world.is_wall(*start) or world.is_wall(*goal):
        raise UnreachableError(f"path endpoints must be free cells: {start} -> {goal}")
    if start == goal:
        return [start]
    dist, prev = _dijkstra(world, start, goal=goal)
    if goal not in dist:
        raise UnreachableError(f"no free path between cells {start} and {goal}")
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    return path

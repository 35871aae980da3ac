import math
import random

import pytest

from vlnkit.simworld.geodesic import (
    UnreachableError,
    geodesic_distance,
    neighbors,
    shortest_cell_path,
)
from vlnkit.simworld.maps import load_map

from .conftest import random_free_point
from .oracles import brute_force_geodesic

SQRT2 = math.sqrt(2.0)

# two chambers with no opening between them
SPLIT_ROOM = "\n".join(
    [
        "#########",
        "#...#...#",
        "#...#...#",
        "#...#...#",
        "#########",
    ]
)


class TestGeodesicDistance:
    def test_straight_two_cells_in_open_room(self, open_room):
        # both points sit on cell origins two rows apart: exactly 2 m
        assert geodesic_distance(open_room, (1.0, 1.0), (1.0, 3.0)) == pytest.approx(
            2.0, abs=1e-12
        )

    def test_same_cell_is_euclidean(self, open_room):
        a, b = (1.2, 1.2), (1.9, 1.7)
        assert geodesic_distance(open_room, a, b) == pytest.approx(math.dist(a, b))

    def test_symmetric(self, open_room):
        a, b = (1.3, 2.7), (8.2, 9.1)
        assert geodesic_distance(open_room, a, b) == pytest.approx(
            geodesic_distance(open_room, b, a), abs=1e-12
        )

    def test_at_least_euclidean(self, open_room):
        rng = random.Random(99)
        for _ in range(200):
            a = random_free_point(open_room, rng)
            b = random_free_point(open_room, rng)
            assert geodesic_distance(open_room, a, b) >= math.dist(a, b) - 1e-9

    def test_triangle_inequality_on_sampled_triples(self, block_room):
        rng = random.Random(5)
        for _ in range(60):
            a = random_free_point(block_room, rng)
            b = random_free_point(block_room, rng)
            c = random_free_point(block_room, rng)
            ab = geodesic_distance(block_room, a, b)
            bc = geodesic_distance(block_room, b, c)
            ac = geodesic_distance(block_room, a, c)
            # path cost through cell origins bounds the relay overhead by
            # two in-cell offsets, each under a cell diagonal
            slack = 2.0 * block_room.cell_size * SQRT2
            assert ac <= ab + bc + slack + 1e-9

    def test_wall_endpoint_rejected(self, open_room):
        with pytest.raises(UnreachableError):
            geodesic_distance(open_room, (0.5, 0.5), (5.0, 5.0))
        with pytest.raises(UnreachableError):
            geodesic_distance(open_room, (5.0, 5.0), (0.5, 0.5))

    def test_unreachable_raises(self):
        world = load_map(SPLIT_ROOM)
        with pytest.raises(UnreachableError):
            geodesic_distance(world, (0.3, 0.3), (1.6, 0.3))

    def test_detour_longer_than_straight_line(self, block_room):
        # start and goal on opposite sides of the interior block
        a, b = (0.6, 0.95), (1.9, 0.95)
        straight = math.dist(a, b)
        assert geodesic_distance(block_room, a, b) > straight + 0.2

    def test_matches_brute_force_oracle(self, block_room, open_room):
        rng = random.Random(31)
        for world in (block_room, open_room):
            for _ in range(60):
                a = random_free_point(world, rng)
                b = random_free_point(world, rng)
                assert geodesic_distance(world, a, b) == pytest.approx(
                    brute_force_geodesic(world, a, b), abs=1e-9
                )


class TestNeighbors:
    def test_no_corner_cutting(self):
        # free cells meet only at a corner; the diagonal move must be absent
        world = load_map(
            "\n".join(
                [
                    "######",
                    "#..###",
                    "#..###",
                    "###..#",
                    "###..#",
                    "######",
                ]
            )
        )
        moves = [cell for cell, _ in neighbors(world, 2, 2)]
        assert (3, 3) not in moves

    def test_open_cell_has_eight_moves(self, open_room):
        assert len(neighbors(world=open_room, row=5, col=5)) == 8

    def test_costs(self, open_room):
        for cell, cost in neighbors(open_room, 5, 5):
            if cell[0] == 5 or cell[1] == 5:
                assert cost == pytest.approx(1.0)
            else:
                assert cost == pytest.approx(SQRT2)


class TestShortestCellPath:
    def test_endpoints_included(self, open_room):
        path = shortest_cell_path(open_room, (1, 1), (1, 4))
        assert path[0] == (1, 1)
        assert path[-1] == (1, 4)
        assert len(path) == 4

    def test_single_cell(self, open_room):
        assert shortest_cell_path(open_room, (2, 2), (2, 2)) == [(2, 2)]

    def test_steps_are_adjacent_and_free(self, block_room):
        path = shortest_cell_path(block_room, (1, 1), (5, 8))
        for (r1, c1), (r2, c2) in zip(path, path[1:]):
            assert max(abs(r1 - r2), abs(c1 - c2)) == 1
            assert not block_room.is_wall(r2, c2)

    def test_wall_endpoint_rejected(self, open_room):
        with pytest.raises(UnreachableError):
            shortest_cell_path(open_room, (0, 0), (5, 5))

    def test_path_cost_matches_distance(self, block_room):
        start, goal = (1, 1), (5, 8)
        path = shortest_cell_path(block_room, start, goal)
        cost = 0.0
        for (r1, c1), (r2, c2) in zip(path, path[1:]):
            cost += block_room.cell_size * (
                SQRT2 if (r1 != r2 and c1 != c2) else 1.0
            )
        a = block_room.cell_origin(*start)
        b = block_room.cell_origin(*goal)
        assert cost == pytest.approx(
            geodesic_distance(block_room, a, b), abs=1e-9
        )

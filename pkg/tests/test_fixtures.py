"""Checks on the bundled episode set and maps.

The shortest-path lengths stored in the bundled episodes are frozen data.
Each one is re-derived here with the slow reference implementation so a
drive-by edit to either the maps or the episode file cannot slip through.
"""

import math

import pytest

from vlnkit import fixtures
from vlnkit.core import load_episodes
from vlnkit.simworld.maps import load_map_file

from .conftest import euclid
from .oracles import brute_force_geodesic


@pytest.fixture(scope="module")
def episodes():
    return load_episodes(fixtures.episode_set_path())


@pytest.fixture(scope="module")
def worlds():
    root = fixtures.fixtures_root()
    return {
        str(p.relative_to(root)): load_map_file(p)
        for p in fixtures.maps_root().glob("*.txt")
    }


def test_episode_set_size(episodes):
    assert len(episodes) == 10
    assert len({e.episode_id for e in episodes}) == 10


def test_maps_are_plural_and_loadable(worlds):
    assert len(worlds) >= 5
    for world in worlds.values():
        assert len(world.free_cells()) > 0


def test_every_episode_references_a_bundled_map(episodes, worlds):
    for episode in episodes:
        assert episode.map_ref in worlds, episode.episode_id


def test_start_and_goal_are_in_free_cells(episodes, worlds):
    for episode in episodes:
        world = worlds[episode.map_ref]
        assert world.is_free_point(*episode.start.xy), episode.episode_id
        assert world.is_free_point(*episode.goal), episode.episode_id


def test_straight_line_distances_exceed_success_radius(episodes):
    # With margin: a stationary agent must never score a success.
    for episode in episodes:
        assert euclid(episode.start.xy, episode.goal) > 3.2, episode.episode_id


def test_one_episode_is_a_long_haul(episodes):
    assert any(euclid(e.start.xy, e.goal) >= 8.0 for e in episodes)


def test_shortest_path_lengths_match_reference_dijkstra(episodes, worlds):
    for episode in episodes:
        world = worlds[episode.map_ref]
        expected = brute_force_geodesic(world, episode.start.xy, episode.goal)
        assert episode.shortest_path_length == pytest.approx(
            expected, abs=1e-9
        ), episode.episode_id


def test_shortest_path_lengths_at_least_euclidean(episodes):
    for episode in episodes:
        straight = euclid(episode.start.xy, episode.goal)
        assert episode.shortest_path_length >= straight - 1e-9, episode.episode_id


def test_headings_are_whole_degrees(episodes):
    # Keeps 15 degree turns exact over any action sequence.
    for episode in episodes:
        assert episode.start.heading == math.floor(episode.start.heading)

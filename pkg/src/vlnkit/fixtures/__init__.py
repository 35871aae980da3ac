"""Built-in episode set: small hand-made maps for tests and smoke runs."""

from importlib import resources
from pathlib import Path


def fixtures_root() -> Path:
    return Path(str(resources.files("vlnkit") / "fixtures"))


def episode_set_path() -> Path:
    """The built-in episode file; map paths inside resolve against its dir."""
    return fixtures_root() / "episodes.json"


def maps_root() -> Path:
    return fixtures_root() / "maps"

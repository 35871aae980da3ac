from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BridgeConfig:
    """Startup settings for one bridge process.

    `listen` is either "stdio" or "host:port"; port 0 picks a free port.
    `frame_size` must match what the harness expects per frame (256).
    """

    habitat_config_path: str
    episode_split: str = "val-unseen"
    listen: str = "127.0.0.1:0"
    frame_size: int = 256

    def __post_init__(self) -> None:
        if not self.habitat_config_path:
            raise ValueError("habitat_config_path must be set")
        if not self.episode_split:
            raise ValueError("episode_split must be non-empty")
        if self.frame_size < 1:
            raise ValueError(f"frame_size must be >= 1, got {self.frame_size}")
        if self.listen != "stdio":
            host, sep, port = self.listen.rpartition(":")
            if not sep or not host or not port.isdigit():
                raise ValueError(
                    f"listen must be 'stdio' or 'host:port', got {self.listen!r}"
                )

    @property
    def tcp_address(self) -> tuple[str, int]:
        if self.listen == "stdio":
            raise ValueError("listen is 'stdio', not a TCP address")
        host, _, port = self.listen.rpartition(":")
        return host, int(port)

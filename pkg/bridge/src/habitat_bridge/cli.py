"""Command line: start a bridge process for one Habitat environment."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable

from habitat_bridge.config import BridgeConfig
from habitat_bridge.env import AssetMissingError
from habitat_bridge.service import BridgeService, make_tcp_server, serve_stdio


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="habitat-bridge", description=__doc__)
    parser.add_argument(
        "--habitat-config", required=True,
        help="Habitat-Lab config file; sensors and agent come from here",
    )
    parser.add_argument("--split", default="val-unseen", help="episode split name")
    parser.add_argument(
        "--listen", default="127.0.0.1:0",
        help="'host:port' (port 0 picks one) or 'stdio'",
    )
    parser.add_argument("--frame-size", type=int, default=256)
    return parser


def _default_env_factory(config: BridgeConfig):
    from habitat_bridge.env import HabitatEnv

    return HabitatEnv(config)


def main(argv: list[str] | None = None, env_factory: Callable | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = BridgeConfig(
            habitat_config_path=args.habitat_config,
            episode_split=args.split,
            listen=args.listen,
            frame_size=args.frame_size,
        )
        env = (env_factory or _default_env_factory)(config)
    except (AssetMissingError, ValueError) as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 2

    service = BridgeService(env, config.frame_size)
    try:
        if config.listen == "stdio":
            serve_stdio(service)
            return 0
        server = make_tcp_server(service, *config.tcp_address)
        host, port = server.server_address[:2]
        sys.stdout.write(json.dumps({"serving": {"host": host, "port": port}}) + "\n")
        sys.stdout.flush()
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            return 130
        finally:
            server.server_close()
        return 0
    finally:
        env.close()


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Start the HTTP service.

Config comes from --config, the SCATTERQUERY_CONFIG env var, or defaults.
"""

import argparse

import uvicorn

from scatterquery.service import ServiceConfig, create_app


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=None, help="path to a JSON config file")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args()

    config = ServiceConfig.load(args.config)
    host = args.host or config.host
    port = args.port or config.port
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()

"""Stdio server exposing the dummy backends over wire protocol v1.

Run as ``python -m reef_miner.mock_server --seed N``. Reads one JSON
request per stdin line, writes exactly one response line per request, and
keeps going on malformed input. Used to exercise the child-process
transport without any real model runtime.
"""

from __future__ import annotations

import argparse
import json
import sys

from .mocks import make_handler
from .protocol import ERROR_MALFORMED, encode_line, error_response


def serve(stdin, stdout, seed: int) -> None:
    handler = make_handler(seed)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            response = error_response("", ERROR_MALFORMED, "line is not valid JSON")
        else:
            response = handler(request)
        stdout.write(encode_line(response) + "\n")
        stdout.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="dummy detector/segmenter/classifier over stdio")
    parser.add_argument("--seed", type=int, default=0, help="layout seed (default 0)")
    parser.add_argument("--mode", choices=["dummy"], default="dummy")
    args = parser.parse_args(argv)
    serve(sys.stdin, sys.stdout, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Serve the bundled sampler service for manual remote-backend testing.

Starts the HTTP sampler on a local port and prints the endpoint URL, which
can be passed to `qroute ... --backend remote --remote-endpoint URL` or
exported as QROUTE_REMOTE_ENDPOINT.  Runs until interrupted.

    python3 scripts/run_mock_annealer.py --port 8765 --mode exact
"""
import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qroute.mock_annealer import MODES, MockAnnealer


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--port", type=int, default=0,
                        help="0 picks a free port")
    parser.add_argument("--mode", choices=sorted(MODES), default="exact")
    args = parser.parse_args(argv)

    service = MockAnnealer(mode=args.mode, port=args.port)
    service.start()
    print(f"serving ({args.mode}) at {service.endpoint}")
    print("export QROUTE_REMOTE_ENDPOINT=" + service.endpoint)
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        print("stopping")
    finally:
        service.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Run every experiment config in configs/ and drop CSVs under results/.

Usage: python3 scripts/run_all.py [--seed N] [--trials N] [--parallelism N]
Expect roughly half an hour on one core with the shipped settings; the two
optimizer sweeps dominate.
"""
import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from iabsim.cli import main as cli_main

CONFIGS = [
    "symmetric_line.yaml",
    "symmetric_ring.yaml",
    "rate_cdf.yaml",
    "min_distance.yaml",
    "forbidden_area.yaml",
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--parallelism", type=int, default=None)
    args = ap.parse_args(argv)

    cfg_dir = pathlib.Path(__file__).resolve().parents[1] / "configs"
    passthrough = []
    for name in ("seed", "trials", "parallelism"):
        value = getattr(args, name)
        if value is not None:
            passthrough += [f"--{name}", str(value)]

    worst = 0
    for name in CONFIGS:
        t0 = time.time()
        print(f"=== {name} ===", flush=True)
        rc = cli_main(["sweep", "--config", str(cfg_dir / name)] + passthrough)
        print(f"--- exit {rc} after {time.time() - t0:.0f}s", flush=True)
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())

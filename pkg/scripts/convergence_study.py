"""Mean per-building annual consumption against sample size, both sectors."""

import argparse
import tempfile
from pathlib import Path

from stockgrid.cli import main as cli
from stockgrid.fixtures import write_bundle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None)
    ap.add_argument("--sizes", default="100,250,500,1000,2000,5000,10000")
    args = ap.parse_args()
    root = Path(args.out or tempfile.mkdtemp(prefix="conv_"))
    cfg = write_bundle(root)
    raise SystemExit(cli(["--config", str(cfg), "convergence", "--sizes", args.sizes,
                          "--sectors", "residential,commercial"]))


if __name__ == "__main__":
    main()

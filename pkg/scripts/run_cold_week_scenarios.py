"""Four-scenario cold-week experiment on the synthetic fixture.

Builds a fixture bundle, runs simulate, shortfall and report, then prints
the shortfall table, coldest-hour demand, annual savings and the
electrification crossover temperature.
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

from stockgrid.cli import main as cli
from stockgrid.fixtures import write_bundle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None, help="bundle directory (default: a temp dir)")
    ap.add_argument("--residential", type=int, default=5000)
    ap.add_argument("--commercial", type=int, default=1000)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    root = Path(args.out or tempfile.mkdtemp(prefix="coldweek_"))
    cfg = write_bundle(root, (args.residential, args.commercial))
    t0 = time.perf_counter()
    for cmd in ("simulate", "shortfall", "report"):
        code = cli(["--config", str(cfg), "--threads", str(args.threads), cmd])
        if code:
            raise SystemExit(code)
    print(f"\nelapsed {time.perf_counter() - t0:.1f} s")
    summary = json.loads((root / "out" / "summary.json").read_text())
    print(f"\ncoldest hour {summary['coldest_hour']} at {summary['coldest_mean_temp_c']:.1f} C")
    for name, row in summary["scenarios"].items():
        print(f"{name:28s} coldest-hour {row['coldest_hour_demand_mw'] / 1000:6.1f} GW   "
              f"annual savings {100 * row['annual_savings_frac']:5.2f}%")
    print(f"outputs in {root / 'out'}")


if __name__ == "__main__":
    main()

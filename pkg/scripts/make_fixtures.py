"""Write a runnable fixture bundle (weather, grid, fractions, config.json)."""

import argparse

from stockgrid.fixtures import write_bundle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory")
    ap.add_argument("--residential", type=int, default=5000)
    ap.add_argument("--commercial", type=int, default=1000)
    ap.add_argument("--format", choices=["epw", "simple_csv"], default="epw")
    ap.add_argument("--with-transfer", action="store_true", help="also write a 2018-like transfer year")
    ap.add_argument("--seed", type=int, default=2021)
    args = ap.parse_args()
    path = write_bundle(args.directory, (args.residential, args.commercial), weather_format=args.format,
                        with_transfer=args.with_transfer, seed=args.seed)
    print(path)


if __name__ == "__main__":
    main()

"""Command-line renderer: aloha-plot --figure <id> --csv <path> --out <path>."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_IDS, FigureJob, render
from .reader import SchemaError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="aloha-plot",
        description="Render experiment CSVs as figures (PNG/SVG)",
    )
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS)
    parser.add_argument("--csv", required=True, help="experiment CSV path")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--linear-y", action="store_true",
                        help="force a linear y axis on delay figures")
    args = parser.parse_args(argv)

    job = FigureJob(csv_path=args.csv, figure_id=args.figure,
                    output_image=args.out,
                    log_y=False if args.linear_y else None)
    try:
        render(job)
    except SchemaError as exc:
        print(f"aloha-plot: schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"aloha-plot: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

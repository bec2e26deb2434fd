"""Command line: plots <kind> --in <dir> --out <file>.

Reads the run directory produced by the solver harness (CSVs plus
summary.json) and writes one figure.  Exits nonzero on schema mismatches,
naming the offending file or column.
"""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .render import FIGURE_KINDS, PlotJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from solver run outputs")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="run directory containing CSVs and summary.json")
    parser.add_argument("--out", dest="output", required=True,
                        help="output figure path (.svg or .png)")
    args = parser.parse_args(argv)
    try:
        info = render(PlotJob(input_dir=args.input_dir, kind=args.kind,
                              output=args.output))
    except (SchemaError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    for solver, details in sorted(info.items()):
        print(f"{solver}: {details}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

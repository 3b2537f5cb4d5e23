#!/usr/bin/env python3
"""Render a figure CSV produced by the solver CLI to an image file.

    python plots/render.py --fig fig1 --csv out/fig1.csv --out out/fig1.pdf

The image lands next to the CSV by default (vector PDF).  Exit code 1 on a
schema mismatch, with the offending columns named.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import fig1
import fig2
import fig3
from schema import SchemaError

RENDERERS = {"fig1": fig1.render, "fig2": fig2.render, "fig3": fig3.render}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fig", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--csv", required=True, help="CSV produced by `mac-pa <fig>`")
    parser.add_argument("--out", default=None, help="image path (default: <csv>.pdf)")
    args = parser.parse_args(argv)

    out = args.out or str(Path(args.csv).with_suffix(".pdf"))
    try:
        written = RENDERERS[args.fig](args.csv, out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(written)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

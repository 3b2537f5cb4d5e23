#!/usr/bin/env python3
"""Achievable rate region at the equilibrium, with the sum-capacity line."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from figstyle import new_axes, plt  # noqa: E402
from schema import SchemaError, load_figure_csv  # noqa: E402


def render(csv_path, out_path) -> Path:
    data = load_figure_csv(csv_path, "fig3")
    fig, ax = new_axes()
    r1, r2 = data["rate_user1"], data["rate_user2"]
    cap = float(np.mean(data["sum_capacity"]))
    x = np.linspace(0.0, cap, 50)
    ax.plot(x, cap - x, "k--", linewidth=0.9, label="sum-capacity $R_1+R_2=C$")
    ax.plot(r1, r2, "o-", label="NE rate pairs over $p$")
    ax.annotate("$p=0$", (r1[0], r2[0]), textcoords="offset points", xytext=(5, 5))
    ax.annotate("$p=1$", (r1[-1], r2[-1]), textcoords="offset points", xytext=(5, 5))
    ax.set_xlim(left=0.0)
    ax.set_ylim(bottom=0.0)
    ax.set_xlabel("$R_1$ (bits/s/Hz)")
    ax.set_ylabel("$R_2$ (bits/s/Hz)")
    ax.legend(loc="lower left")
    out_path = Path(out_path)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", required=True)
    parser.add_argument("--out", default=None, help="image path (default: <csv>.pdf)")
    args = parser.parse_args(argv)
    out = args.out or str(Path(args.csv).with_suffix(".pdf"))
    try:
        print(render(args.csv, out))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

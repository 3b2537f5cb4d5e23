#!/usr/bin/env python3
"""Sum-rate efficiency versus the coordination distribution parameter p."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from figstyle import new_axes, plt  # noqa: E402
from schema import SchemaError, load_figure_csv  # noqa: E402


def render(csv_path, out_path) -> Path:
    data = load_figure_csv(csv_path, "fig2")
    fig, ax = new_axes()
    ax.plot(data["p"], data["sre_spatial"], "o-", label="spatial PA")
    ax.plot(data["p"], data["sre_space_time"], "s-", label="space-time PA")
    ax.plot(data["p"], data["sre_temporal"], "^-", label="temporal PA")
    ax.axhline(1.0, color="k", linestyle=":", linewidth=0.9)
    ax.set_xlabel("coordination parameter $p$")
    ax.set_ylabel("sum-rate efficiency")
    ax.legend(loc="lower right")
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

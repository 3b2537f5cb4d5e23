#!/usr/bin/env python3
"""Sum-rate versus transmit power: fair SIC, SUD and the sum-capacity bound."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from figstyle import new_axes, plt  # noqa: E402
from schema import SchemaError, load_figure_csv  # noqa: E402


def render(csv_path, out_path) -> Path:
    data = load_figure_csv(csv_path, "fig1")
    fig, ax = new_axes()
    ax.plot(data["P"], data["sum_capacity"], "k--", label="sum-capacity")
    ax.plot(data["P"], data["sum_rate_sic"], "o-", label="fair SIC (space-time PA)")
    ax.plot(data["P"], data["sum_rate_sud"], "s-", label="SUD")
    ax.set_xscale("log")
    ax.set_xlabel("transmit power $P$")
    ax.set_ylabel("achievable sum-rate (bits/s/Hz)")
    ax.legend(loc="upper left")
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

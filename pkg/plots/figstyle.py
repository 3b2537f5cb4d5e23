"""Shared matplotlib defaults for the figure scripts."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update(
    {
        "figure.figsize": (5.2, 3.6),
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.35,
        "lines.linewidth": 1.4,
        "legend.frameon": False,
        "savefig.bbox": "tight",
    }
)


def new_axes():
    fig = plt.figure()
    return fig, fig.add_subplot(1, 1, 1)

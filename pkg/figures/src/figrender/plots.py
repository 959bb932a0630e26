"""Median-and-quartile convergence figures from harness CSVs."""

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import EXPECTED_COLUMNS, SchemaError, derive_x, load_records

FLOOR = 1e-15

# fixed salt so SVG output is reproducible byte for byte
matplotlib.rcParams["svg.hashsalt"] = "figrender"


@dataclass
class PlotSpec:
    csv_path: str
    x: str = "matvecs"
    y: str = "eps_empirical_floored"
    yscale: str = "log"
    xscale: str = "linear"
    series_key: str = "block_size"
    output_path: str = "figure.png"
    panels: tuple = ("log",)  # y-scale per panel
    title: str = ""

    def validate_columns(self, header):
        for col in (self.y, self.series_key):
            if col not in header:
                raise SchemaError(f"column {col!r} not in CSV header")
        if self.x in header or self.x in ("iterations", "gap_size"):
            return
        raise SchemaError(f"x-axis field {self.x!r} not available")


def load_figure_spec(csv_path, preset, output_path="figure.png"):
    """Preset layouts mirroring the benchmark figures."""
    if preset == "gap_sweep":
        return PlotSpec(csv_path=csv_path, x="gap_size", xscale="log",
                        series_key="matvecs", output_path=output_path,
                        panels=("log",), title="error vs gap size")
    if preset == "block_size":
        return PlotSpec(csv_path=csv_path, x="matvecs", series_key="block_size",
                        output_path=output_path, panels=("linear", "log"),
                        title="error vs products by block size")
    if preset == "perturb_sweep":
        return PlotSpec(csv_path=csv_path, x="matvecs", series_key="delta",
                        output_path=output_path, panels=("linear", "log"),
                        title="error vs products under perturbation")
    if preset == "ortho_stability":
        return PlotSpec(csv_path=csv_path, x="matvecs", series_key="ortho_policy",
                        output_path=output_path, panels=("log",),
                        title="orthogonalization stability")
    return PlotSpec(csv_path=csv_path, x="matvecs", series_key="block_size",
                    output_path=output_path, panels=("log",), title=preset)


def _series_label(spec, value, row):
    if spec.series_key == "delta":
        if value is None:
            return f"b={row['block_size']} reference"
        return f"delta={value:g}"
    if spec.series_key == "block_size":
        return f"b={value}"
    if spec.series_key == "matvecs":
        return f"t={value - 1}"
    return str(value)


def _quantile_bands(rows, spec):
    """series label -> sorted (x, q25, median, q75) arrays."""
    cells = {}
    for row in rows:
        label = _series_label(spec, row[spec.series_key], row)
        x = derive_x(row, spec.x)
        cells.setdefault(label, {}).setdefault(x, []).append(row[spec.y])
    bands = {}
    for label, by_x in sorted(cells.items()):
        xs = np.array(sorted(by_x))
        q25, med, q75 = (np.empty_like(xs, dtype=float) for _ in range(3))
        for i, x in enumerate(xs):
            q25[i], med[i], q75[i] = np.quantile(
                by_x[x], [0.25, 0.5, 0.75], method="linear")
        bands[label] = (xs, q25, med, q75)
    return bands


def render_figure(spec):
    """Build the matplotlib Figure for a spec (no file output)."""
    header, rows = load_records(spec.csv_path)
    spec.validate_columns(header)
    bands = _quantile_bands(rows, spec)
    n_panels = len(spec.panels)
    fig, axes = plt.subplots(1, n_panels, figsize=(6.0 * n_panels, 4.5), squeeze=False)
    for ax, yscale in zip(axes[0], spec.panels):
        for label, (xs, q25, med, q75) in bands.items():
            ax.plot(xs, med, label=label, linewidth=1.6)
            ax.fill_between(xs, q25, q75, alpha=0.25, linewidth=0)
        ax.set_xscale(spec.xscale)
        ax.set_yscale(yscale)
        if yscale == "log":
            # values were floored upstream; keep the floor in view
            ax.axhline(FLOOR, color="gray", linestyle="--", linewidth=0.8)
            lo, hi = ax.get_ylim()
            ax.set_ylim(min(lo, FLOOR / 3), max(hi, 1.0))
        ax.set_xlabel(spec.x)
        ax.set_ylabel(spec.y)
        if bands:
            ax.legend(fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def save_figure(fig, output_path):
    """Write the figure deterministically (dates stripped from metadata)."""
    kwargs = {"dpi": 110}
    if str(output_path).endswith(".svg"):
        kwargs["metadata"] = {"Date": None}
    fig.savefig(output_path, **kwargs)
    plt.close(fig)
    return output_path


def render(spec):
    """Render a PlotSpec straight to its output path."""
    return save_figure(render_figure(spec), spec.output_path)

"""Analysis outputs: delimited slope/layer tables and matplotlib figures
rendered to files alongside them."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "write_slope_csv",
    "write_layers_csv",
    "render_slope_figure",
    "render_layers_figure",
    "render_raster_figure",
]

_PNG_META = {"Software": "rheospan"}


def write_slope_csv(path, slopes) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "slope_u_pct", "slope_v_pct"])
        su = slopes.slope_u_pct
        sv = slopes.slope_v_pct
        for i in range(su.shape[0]):
            for j in range(su.shape[1]):
                writer.writerow([i, j, repr(float(su[i, j])), repr(float(sv[i, j]))])


def write_layers_csv(path, support) -> None:
    stack = support.stack
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "height", "model_area", "support_area", "model_cells", "support_cells"])
        for k, layer in enumerate(stack.layers):
            model_cells = int(stack.model_masks[k].sum()) if stack.model_masks else 0
            support_cells = int(support.support_masks[k].sum()) if support.support_masks else 0
            writer.writerow(
                [
                    k,
                    repr(float(layer.height)),
                    repr(float(layer.model_area())),
                    repr(float(layer.support_area())),
                    model_cells,
                    support_cells,
                ]
            )


def render_slope_figure(slopes, path) -> None:
    slope = np.array(slopes.slope_u_pct, dtype=float)
    finite = slope[np.isfinite(slope)]
    vmax = float(finite.max()) if len(finite) else 1.0
    display = np.where(np.isfinite(slope), slope, vmax)
    fig, ax = plt.subplots(figsize=(7.0, 3.2), dpi=110)
    im = ax.imshow(display.T, origin="lower", aspect="auto", cmap="magma", vmin=0.0, vmax=max(vmax, 1.0))
    ax.contour(display.T, levels=[slopes.threshold_pct], colors="cyan", linewidths=1.0)
    ax.set_xlabel("span cell (u)")
    ax.set_ylabel("cross cell (v)")
    ax.set_title(f"walking slope, max {slopes.max_slope_pct:.1f}% (threshold {slopes.threshold_pct:.0f}%)")
    fig.colorbar(im, ax=ax, label="slope %")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def render_layers_figure(support, path) -> None:
    stack = support.stack
    heights = [layer.height for layer in stack.layers]
    model = [layer.model_area() for layer in stack.layers]
    supp = [layer.support_area() for layer in stack.layers]
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=110)
    ax.plot(model, heights, label="model area", color="tab:blue")
    ax.plot(supp, heights, label="support area", color="tab:orange")
    ax.set_xlabel("layer area")
    ax.set_ylabel("height")
    ax.set_title(f"layer areas, support fraction {support.support_fraction:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def render_raster_figure(raster, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 2.8), dpi=110)
    im = ax.imshow(raster.values, origin="lower", aspect="auto", cmap="viridis", extent=(0, 1, 0, 1))
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_title("accumulation raster")
    fig.colorbar(im, ax=ax, label="value")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)

"""Heatmap and composite rendering of solver artifacts."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fieldtable import FieldTable


@dataclass(frozen=True)
class PanelSpec:
    csv_path: str
    report_path: str | None = None
    colormap: str = "viridis"
    title: str = ""
    boundary_overlay: bool = True
    square_values: bool = True  # render rho = value^2 for amplitude fields


def _load_report(spec: PanelSpec) -> dict | None:
    if spec.report_path is None:
        return None
    path = Path(spec.report_path)
    if not path.exists():
        warnings.warn(f"report {path} missing; rendering without annotations")
        return None
    with open(path) as fh:
        return json.load(fh)


def _draw_panel(ax, spec: PanelSpec, vmax: float | None = None):
    table = FieldTable.read(spec.csv_path)
    data = table.values**2 if spec.square_values else table.values
    shown = np.ma.masked_where(table.classes == "E", data)
    h = table.spacing
    extent = (table.xs[0] - h / 2, table.xs[-1] + h / 2,
              table.ys[0] - h / 2, table.ys[-1] + h / 2)
    cmap = plt.get_cmap(spec.colormap).copy()
    cmap.set_bad(alpha=0.0)
    image = ax.imshow(shown, origin="lower", extent=extent, cmap=cmap,
                      vmin=0.0, vmax=vmax)

    info = {"panel_max": float(np.ma.max(shown)), "n_annotations": 0,
            "boundary_outlined": False}

    if spec.boundary_overlay:
        by, bx = np.nonzero(table.classes == "B")
        ax.scatter(table.xs[bx], table.ys[by], s=0.3, c="black", marker="s",
                   linewidths=0, label="boundary")
        info["boundary_outlined"] = True

    report = _load_report(spec)
    if report is not None:
        for key, marker, color in (("interior_max_xy", "o", "tab:red"),
                                   ("boundary_max_xy", "^", "white")):
            xy = report.get(key)
            if xy is not None:
                ax.plot([xy[0]], [xy[1]], marker=marker, ms=7, mec="black",
                        mfc=color)
                info["n_annotations"] += 1
        verdict = report.get("verdict")
        if verdict:
            ax.set_xlabel(verdict)
            info["verdict"] = verdict

    ax.set_title(spec.title or Path(spec.csv_path).parent.name)
    ax.set_aspect("equal")
    return info, image


def render_heatmap(spec: PanelSpec, out_path) -> dict:
    """One density heatmap; exterior transparent, extrema annotated."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    info, image = _draw_panel(ax, spec)
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return info


def render_figure1(panels, out_path) -> list[dict]:
    """1x3 composite with a shared color scale."""
    if len(panels) != 3:
        raise ValueError(f"need exactly 3 panels, got {len(panels)}")
    vmax = 0.0
    for spec in panels:
        table = FieldTable.read(spec.csv_path)
        data = table.values**2 if spec.square_values else table.values
        vmax = max(vmax, float(data[table.classes != "E"].max()))

    fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
    infos = []
    image = None
    for ax, spec in zip(axes, panels):
        info, image = _draw_panel(ax, spec, vmax=vmax)
        infos.append(info)
    fig.colorbar(image, ax=list(axes), shrink=0.85, label="density")
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return infos

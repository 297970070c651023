import json
import math

import numpy as np
import pytest

from plotkit import PanelSpec, render_figure1, render_heatmap
from plotkit.cli import main


def make_field_csv(path, n=12, spike=None, constant=None):
    """Synthetic disc-shaped field in the declared CSV format."""
    xs = [float(v) for v in np.linspace(-1.0, 1.0, n)]
    lines = ["x,y,class,value"]
    for y in xs:
        for x in xs:
            r = math.hypot(x, y)
            if r > 0.95:
                tag, val = "E", 0.0
            elif r > 0.75:
                tag, val = "B", 1.0
            else:
                tag, val = "I", constant if constant is not None else 0.4 + 0.5 * r
            if spike is not None and abs(x - spike[0]) < 1e-9 and abs(y - spike[1]) < 1e-9:
                val = 3.0
            lines.append(f"{x!r},{y!r},{tag},{float(val)!r}")
    path.write_text("\n".join(lines) + "\n")


def make_report_json(path, verdict="MaxOnBoundary",
                     interior_xy=(0.0, 0.0), boundary_xy=(0.8, 0.0)):
    path.write_text(json.dumps({
        "interior_max": 0.9, "interior_max_xy": list(interior_xy),
        "boundary_max": 1.0, "boundary_max_xy": list(boundary_xy),
        "margin": 0.1, "verdict": verdict, "residual": 1e-14, "iterations": 0,
    }))


def test_heatmap_with_annotations(tmp_path):
    csv = tmp_path / "field.csv"
    report = tmp_path / "smp_report.json"
    make_field_csv(csv)
    make_report_json(report)
    out = tmp_path / "panel.png"
    info = render_heatmap(PanelSpec(csv_path=str(csv), report_path=str(report)),
                          out)
    assert out.exists() and out.stat().st_size > 0
    assert info["boundary_outlined"]
    assert info["n_annotations"] == 2
    assert info["verdict"] == "MaxOnBoundary"


def test_constant_field_panel(tmp_path):
    csv = tmp_path / "field.csv"
    make_field_csv(csv, constant=1.0)
    report = tmp_path / "r.json"
    make_report_json(report, verdict="ConstantField")
    info = render_heatmap(PanelSpec(csv_path=str(csv), report_path=str(report)),
                          tmp_path / "c.png")
    assert info["verdict"] == "ConstantField"


def test_interior_spike_panel(tmp_path):
    csv = tmp_path / "field.csv"
    make_field_csv(csv, n=13, spike=(0.0, 0.0))
    report = tmp_path / "r.json"
    make_report_json(report, verdict="Violation", interior_xy=(0.0, 0.0))
    info = render_heatmap(PanelSpec(csv_path=str(csv), report_path=str(report)),
                          tmp_path / "s.png")
    assert info["verdict"] == "Violation"
    assert info["panel_max"] == pytest.approx(9.0)  # squared spike


def test_missing_report_degrades_with_warning(tmp_path):
    csv = tmp_path / "field.csv"
    make_field_csv(csv)
    out = tmp_path / "bare.png"
    with pytest.warns(UserWarning, match="without annotations"):
        info = render_heatmap(
            PanelSpec(csv_path=str(csv), report_path=str(tmp_path / "nope.json")),
            out)
    assert out.exists()
    assert info["n_annotations"] == 0


def test_composite_requires_three_panels(tmp_path):
    csv = tmp_path / "f.csv"
    make_field_csv(csv)
    with pytest.raises(ValueError):
        render_figure1([PanelSpec(csv_path=str(csv))] * 2, tmp_path / "x.png")


def test_composite_allows_mismatched_grids(tmp_path):
    paths = []
    for k, n in enumerate((10, 14, 17)):
        csv = tmp_path / f"f{k}.csv"
        make_field_csv(csv, n=n)
        paths.append(csv)
    out = tmp_path / "composite.png"
    infos = render_figure1([PanelSpec(csv_path=str(p)) for p in paths], out)
    assert out.exists() and len(infos) == 3


def test_cli_heatmap_and_errors(tmp_path):
    csv = tmp_path / "field.csv"
    make_field_csv(csv)
    out = tmp_path / "o.png"
    assert main(["heatmap", "--csv", str(csv), "--out", str(out)]) == 0
    assert out.exists()

    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,class,value\n0,0,Z,1\n")
    assert main(["heatmap", "--csv", str(bad), "--out", str(tmp_path / "n.png")]) == 2

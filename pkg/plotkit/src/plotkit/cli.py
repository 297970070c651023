"""plotkit CLI.

    plotkit heatmap --csv FIELD.csv [--report REPORT.json] --out OUT.png
    plotkit figure1 --manifest MANIFEST.json --out OUT.png

`figure1` reads a run manifest, locates the three `*/field.csv` panel
artifacts next to it, and renders the shared-scale composite.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .fieldtable import MalformedCSV
from .render import PanelSpec, render_figure1, render_heatmap


def _panels_from_manifest(manifest_path) -> list[PanelSpec]:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = manifest_path.parent
    panels = []
    for rel in sorted(manifest.get("artifacts", {})):
        rel_path = Path(rel)
        if rel_path.name != "field.csv":
            continue
        report = base / rel_path.parent / "smp_report.json"
        panels.append(PanelSpec(
            csv_path=str(base / rel_path),
            report_path=str(report) if report.exists() else None,
            title=rel_path.parent.name,
        ))
    if len(panels) != 3:
        raise ValueError(
            f"manifest lists {len(panels)} field.csv panels, need exactly 3"
        )
    return panels


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="render solver artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    p_heat = sub.add_parser("heatmap", help="single-panel density heatmap")
    p_heat.add_argument("--csv", required=True)
    p_heat.add_argument("--report", default=None)
    p_heat.add_argument("--out", required=True)
    p_heat.add_argument("--cmap", default="viridis")
    p_heat.add_argument("--title", default="")
    p_heat.add_argument("--no-boundary", action="store_true")
    p_heat.add_argument("--raw-values", action="store_true",
                        help="plot values directly instead of value^2")

    p_fig = sub.add_parser("figure1", help="three-panel composite")
    p_fig.add_argument("--manifest", required=True)
    p_fig.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "heatmap":
            spec = PanelSpec(csv_path=args.csv, report_path=args.report,
                             colormap=args.cmap, title=args.title,
                             boundary_overlay=not args.no_boundary,
                             square_values=not args.raw_values)
            info = render_heatmap(spec, args.out)
            print(f"wrote {args.out} (max {info['panel_max']:.4g}, "
                  f"{info['n_annotations']} annotations)")
        else:
            panels = _panels_from_manifest(args.manifest)
            infos = render_figure1(panels, args.out)
            print(f"wrote {args.out} ({len(infos)} panels)")
        return 0
    except MalformedCSV as exc:
        print(f"malformed csv: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

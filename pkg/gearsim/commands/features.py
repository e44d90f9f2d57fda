# gearsim/commands/features.py
from pathlib import Path
from typing import List, Optional

import typer

from gearsim.commands.common import command_errors, console, frame_table
from gearsim.config import get_output_dir
from gearsim.dependencies import get_feature_service
from gearsim.services.feature_service import FeatureSettings
from gearsim.services.sigproc_service import DEFAULT_SIDEBANDS


def feature_settings(shaft: str, points_per_rev: int, sidebands: int, harmonics: Optional[int],
                     mesh_order: Optional[int], shaft_ratio: Optional[float]) -> FeatureSettings:
    return FeatureSettings(shaft=shaft, points_per_rev=points_per_rev, sidebands=sidebands, harmonics=harmonics,
                           mesh_order=mesh_order, shaft_ratio=shaft_ratio)


SHAFT_OPTION = typer.Option("input", "--shaft", help="Shaft to average: input or output")
POINTS_OPTION = typer.Option(1024, "--points-per-rev", min=8, help="Angular samples per revolution")
SIDEBANDS_OPTION = typer.Option(DEFAULT_SIDEBANDS, "--sidebands", min=0, help="Sideband pairs removed per harmonic")
HARMONICS_OPTION = typer.Option(None, "--harmonics", min=0, help="Mesh harmonics removed (default: all below Nyquist)")
MESH_ORDER_OPTION = typer.Option(None, "--mesh-order", help="Tooth count of the averaged shaft, for CSV records")
SHAFT_RATIO_OPTION = typer.Option(None, "--shaft-ratio", help="Averaged-shaft revolutions per tach pulse, CSV records")


def features(
    inputs: List[Path] = typer.Argument(..., help="Run directories, batch directories or CSV records with a tach column"),
    shaft: str = SHAFT_OPTION,
    points_per_rev: int = POINTS_OPTION,
    sidebands: int = SIDEBANDS_OPTION,
    harmonics: Optional[int] = HARMONICS_OPTION,
    mesh_order: Optional[int] = MESH_ORDER_OPTION,
    shaft_ratio: Optional[float] = SHAFT_RATIO_OPTION,
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
):
    """Synchronous averages, difference signals and condition indicators"""
    with command_errors("features"):
        settings = feature_settings(shaft, points_per_rev, sidebands, harmonics, mesh_order, shaft_ratio)
        service = get_feature_service(get_output_dir(output))
        tables = service.extract(service.load(inputs, settings), settings)
        service.write(tables)

    ci = tables.ci_table
    console.print(frame_table(
        "condition indicators (normalized)",
        ("label", "n", "diff_rms", "diff_kurtosis"),
        [(label, len(g), float(g["diff_rms"].mean()), float(g["diff_kurtosis"].mean()))
         for label, g in ci.groupby("label", sort=False)],
    ))

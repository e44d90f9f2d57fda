# gearsim/commands/plot_data.py
from pathlib import Path
from typing import Optional

import typer

from gearsim.commands.common import command_errors, console, summary_table
from gearsim.commands.features import POINTS_OPTION
from gearsim.commands.simulate import CONFIG_OPTION, FAULT_OPTION, PRESET_OPTION
from gearsim.config import cli_overrides, get_output_dir, load_run_config
from gearsim.dependencies import get_plot_data_service
from gearsim.services.simulation_service import MANIFEST_FILE


def plot_data(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    fault: Optional[str] = FAULT_OPTION,
    profile_error_seed: Optional[int] = typer.Option(None, "--profile-error-seed"),
    din_grade: Optional[int] = typer.Option(None, "--din-grade"),
    run: Optional[Path] = typer.Option(None, "--run", help="Simulation directory; adds per-shaft synchronous averages"),
    points_per_rev: int = POINTS_OPTION,
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
):
    """CSV data for tooth profiles, profile errors, mesh stiffness and synchronous averages"""
    with command_errors("plot-data"):
        if run is not None and config is None and preset is None:
            config = run / MANIFEST_FILE
        overrides = cli_overrides(fault=fault, profile_error_seed=profile_error_seed, din_grade=din_grade)
        run_config = load_run_config(config, preset, overrides)
        out_dir = get_output_dir(output, run_config)
        written = get_plot_data_service(out_dir).export(run_config, run, points_per_rev)

    console.print(summary_table("plot data", {"output": str(out_dir), **{name: "written" for name in written}}))

# gearsim/commands/batch.py
from pathlib import Path
from typing import Optional

import typer

from gearsim.commands.common import command_errors, console, frame_table
from gearsim.commands.simulate import CONFIG_OPTION, FAULT_OPTION, PRESET_OPTION
from gearsim.config import cli_overrides, get_output_dir, load_run_config
from gearsim.dependencies import get_simulation_service, get_workers
from gearsim.errors import NumericalError


def batch(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    fault: Optional[str] = FAULT_OPTION,
    n_signals: int = typer.Option(1, "--n-signals", "-n", min=1, help="Number of runs"),
    base_seed: Optional[int] = typer.Option(None, "--base-seed", help="Run i uses base seed + i (default: config seed)"),
    profile_error_seed: Optional[int] = typer.Option(None, "--profile-error-seed", help="Shared by every run"),
    duration: Optional[float] = typer.Option(None, "--duration"),
    din_grade: Optional[int] = typer.Option(None, "--din-grade"),
    noise_std: Optional[float] = typer.Option(None, "--noise-std"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Default: GEARSIM_WORKERS or all cores"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
):
    """Simulate n runs sharing one profile-error field into run_NNNN directories"""
    with command_errors("batch"):
        overrides = cli_overrides(fault, None, profile_error_seed, duration, din_grade, noise_std)
        run_config = load_run_config(config, preset, overrides)
        out_dir = get_output_dir(output, run_config)
        index = get_simulation_service(out_dir).batch(
            run_config, n_signals, workers=get_workers(workers), base_seed=base_seed, progress=True,
        )

    runs = index["runs"]
    console.print(frame_table(
        f"batch {out_dir}",
        ("run", "seed", "status"),
        [(r["run"], r["seed"], r["status"]) for r in runs],
        caption=f"profile-error seed {index['profile_error_seed']}",
    ))
    if any(r["status"] != "ok" for r in runs):
        raise typer.Exit(code=NumericalError.exit_code)

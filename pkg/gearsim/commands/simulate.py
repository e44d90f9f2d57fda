# gearsim/commands/simulate.py
from pathlib import Path
from typing import Optional

import typer

from gearsim.commands.common import command_errors, console, summary_table
from gearsim.config import cli_overrides, get_output_dir, load_run_config
from gearsim.dependencies import get_simulation_service

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Run config JSON (a manifest.json is accepted too)")
PRESET_OPTION = typer.Option(None, "--preset", "-p", help="Shipped setup: tooth-breakage, pitting, involute-destruction")
FAULT_OPTION = typer.Option(
    None, "--fault", "-f",
    help="healthy | breakage:F[:tooth=I][:wheel=W] | pitting:MM[:pos=P][:axial=A][:radial=R][:teeth=I,J] "
         "| involute:UM[:teeth=I,J]",
)


def simulate(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    fault: Optional[str] = FAULT_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed", help="Noise and initial-condition seed"),
    profile_error_seed: Optional[int] = typer.Option(None, "--profile-error-seed", help="Defaults to --seed"),
    duration: Optional[float] = typer.Option(None, "--duration", help="Simulated time in seconds"),
    din_grade: Optional[int] = typer.Option(None, "--din-grade", help="Surface quality grade 5-9"),
    noise_std: Optional[float] = typer.Option(None, "--noise-std", help="Measurement noise in m/s^2"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory"),
):
    """Simulate one run: writes signal.csv and manifest.json"""
    with command_errors("simulate"):
        overrides = cli_overrides(fault, seed, profile_error_seed, duration, din_grade, noise_std)
        run_config = load_run_config(config, preset, overrides)
        out_dir = get_output_dir(output, run_config)
        run = get_simulation_service(out_dir).simulate(run_config)

    manifest = run.manifest
    console.print(summary_table("simulation", {
        "output": str(out_dir),
        "health state": manifest["health_state"],
        "samples": manifest["n_samples"],
        "tach pulses": len(manifest["tach_pulses"]),
        "mesh frequency (Hz)": manifest["speeds"]["mesh_hz"],
        "mean mesh stiffness (N/m)": manifest["gms"]["mean_n_per_m"],
        "profile errors": manifest["profile_error_hash"][:12],
    }))

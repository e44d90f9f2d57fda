# gearsim/commands/enhance.py
import json
from pathlib import Path
from typing import Optional

import typer

from gearsim.commands.common import command_errors, console, summary_table
from gearsim.commands.features import (
    HARMONICS_OPTION,
    MESH_ORDER_OPTION,
    POINTS_OPTION,
    SHAFT_OPTION,
    SHAFT_RATIO_OPTION,
    SIDEBANDS_OPTION,
    feature_settings,
)
from gearsim.config import get_output_dir
from gearsim.dependencies import get_feature_service, get_storage, get_workers
from gearsim.errors import ConfigError, StorageError
from gearsim.schemas.enhancement import ErrorTable, GridSpec
from gearsim.services.enhancement_service import tune
from gearsim.services.storage_service import StorageService

ERROR_TABLE_FILE = "error_table.csv"
BREAKDOWN_FILE = "breakdown.csv"
SUMMARY_FILE = "summary.json"


def load_grid(path: Optional[Path], seed: Optional[int], n_noise: Optional[int]) -> GridSpec:
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if n_noise is not None:
        overrides["n_noise"] = n_noise
    if path is None:
        return GridSpec.default(**overrides)
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as e:
        raise StorageError(f"cannot read grid {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return GridSpec.model_validate({**payload, **overrides})


def write_error_table(storage: StorageService, table: ErrorTable, summary: dict) -> None:
    storage.write_csv(ERROR_TABLE_FILE, table.to_frame())
    if not table.breakdown.empty:
        storage.write_csv(BREAKDOWN_FILE, table.breakdown)
    storage.write_json(SUMMARY_FILE, summary)


def enhance(
    sim_dir: Path = typer.Argument(..., help="Simulated records or their features output"),
    exp_dir: Path = typer.Argument(..., help="Measured records or their features output"),
    grid: Optional[Path] = typer.Option(None, "--grid", help="Grid JSON (default: the full search grid)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Master noise seed"),
    n_noise: Optional[int] = typer.Option(None, "--n-noise", min=1, help="Noise realizations per signal"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w"),
    shaft: str = SHAFT_OPTION,
    points_per_rev: int = POINTS_OPTION,
    sidebands: int = SIDEBANDS_OPTION,
    harmonics: Optional[int] = HARMONICS_OPTION,
    mesh_order: Optional[int] = MESH_ORDER_OPTION,
    shaft_ratio: Optional[float] = SHAFT_RATIO_OPTION,
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
):
    """Grid-search width ratio, fault-to-harmonics ratio and noise level against measured CIs"""
    with command_errors("enhance"):
        grid_spec = load_grid(grid, seed, n_noise)
        settings = feature_settings(shaft, points_per_rev, sidebands, harmonics, mesh_order, shaft_ratio)
        out_dir = get_output_dir(output)
        features = get_feature_service(out_dir)
        sim = features.load_dataset(sim_dir, settings)
        exp = features.load_dataset(exp_dir, settings)
        best, table = tune(sim, exp, grid_spec, workers=get_workers(workers), progress=True)
        summary = {
            "best_params": best.model_dump(),
            "score": table.best_score,
            "grid": grid_spec.model_dump(mode="json"),
            "seed": grid_spec.seed,
            "groups": list(table.groups),
            "cis": list(table.cis),
        }
        write_error_table(get_storage(out_dir), table, summary)

    console.print(summary_table("enhancement", {
        "width ratio": best.width_ratio,
        "fault-to-harmonics ratio": best.fault_to_harmonics,
        "noise level": best.noise_level,
        "score": table.best_score,
        "combinations": grid_spec.size,
    }))

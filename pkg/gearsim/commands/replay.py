# gearsim/commands/replay.py
from pathlib import Path
from typing import Optional

import typer

from gearsim.commands.common import command_errors, console, summary_table
from gearsim.commands.enhance import write_error_table
from gearsim.config import load_ci_tables
from gearsim.dependencies import get_storage
from gearsim.services.enhancement_service import replay_ci_tables


def replay(
    tables: str = typer.Argument(..., help="Shipped CI tables (tooth-breakage, pitting, involute-destruction) or a path"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Also write error_table.csv and summary.json"),
):
    """Score stored CI tables and report the selected parameter triple"""
    with command_errors("replay"):
        fixture = load_ci_tables(tables)
        best, table = replay_ci_tables(fixture)
        if output is not None:
            summary = {
                "best_params": best.model_dump(),
                "score": table.best_score,
                "source": fixture.get("name", tables),
                "groups": list(table.groups),
                "cis": list(table.cis),
            }
            write_error_table(get_storage(output), table, summary)

    console.print(summary_table(f"replay {fixture.get('name', tables)}", {
        "width ratio": best.width_ratio,
        "fault-to-harmonics ratio": best.fault_to_harmonics,
        "noise level": best.noise_level,
        "score": table.best_score,
        "combinations": int(table.errors.shape[0]),
    }))

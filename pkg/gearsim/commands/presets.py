# gearsim/commands/presets.py
import json
from typing import Optional

import typer

from gearsim.commands.common import command_errors, console, frame_table
from gearsim.config import available_presets, load_preset


def presets(
    show: Optional[str] = typer.Option(None, "--show", help="Print one preset as JSON"),
):
    """List the shipped experimental setups"""
    with command_errors("presets"):
        if show is not None:
            preset = load_preset(show)
            typer.echo(json.dumps(preset.model_dump(mode="json"), indent=2))
            return
        rows = []
        for name in available_presets():
            p = load_preset(name)
            cfg = p.config
            rows.append((
                name.replace("_", "-"),
                f"{cfg.pinion.tooth_count}/{cfg.gear.tooth_count}",
                cfg.din_grade,
                cfg.conditions.input_speed_hz,
                cfg.conditions.output_load_nm,
                p.cases,
                p.records,
            ))

    console.print(frame_table(
        "presets",
        ("name", "teeth", "DIN", "input (Hz)", "load (N m)", "cases", "records"),
        rows,
        caption="structural defaults are non-authoritative",
    ))

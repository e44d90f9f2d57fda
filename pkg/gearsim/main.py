# gearsim/main.py
from dotenv import load_dotenv
load_dotenv()

import typer

from gearsim.commands import batch, bench, enhance, features, plot_data, presets, replay, simulate

app = typer.Typer(
    name="gearsim",
    help="Spur gear vibration simulation, signal processing and simulated-signal enhancement",
    no_args_is_help=True,
    add_completion=False,
)

app.command("simulate")(simulate.simulate)
app.command("batch")(batch.batch)
app.command("features")(features.features)
app.command("enhance")(enhance.enhance)
app.command("replay")(replay.replay)
app.command("bench")(bench.bench)
app.command("plot-data")(plot_data.plot_data)
app.command("presets")(presets.presets)


if __name__ == "__main__":
    app()

# gearsim/commands/bench.py
from pathlib import Path
from typing import List, Optional

import typer

from gearsim.commands.common import command_errors, console, frame_table
from gearsim.config import get_output_dir, load_preset
from gearsim.dependencies import get_storage
from gearsim.errors import BenchmarkError
from gearsim.services.bench_service import BENCHMARKS, BenchSizes, run_benchmarks

REPORT_FILE = "bench_report.csv"


def bench(
    strain_points: int = typer.Option(8000, "--strain-points", help="Tooth sections for the strain-energy kernels"),
    n_cyc: int = typer.Option(512, "--n-cyc", help="Cycle points for stiffness assembly"),
    z_points: int = typer.Option(1000, "--z-points", help="Face-width points for the reference assembly"),
    cycles: int = typer.Option(10, "--cycles", help="Mesh cycles marched in the Jacobian benchmark"),
    steps_per_cycle: int = typer.Option(64, "--steps-per-cycle"),
    repeats: int = typer.Option(3, "--repeats", min=1),
    kernel: Optional[List[str]] = typer.Option(None, "--kernel", "-k", help=f"Any of {', '.join(BENCHMARKS)}"),
    preset: str = typer.Option("tooth-breakage", "--preset", "-p", help="Gear pair the kernels run on"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
):
    """Time the fast kernels against their reference versions after checking they agree"""
    with command_errors("bench"):
        sizes = BenchSizes(strain_points=strain_points, n_cyc=n_cyc, z_points=z_points, jacobian_cycles=cycles,
                           steps_per_cycle=steps_per_cycle, repeats=repeats)
        report = run_benchmarks(load_preset(preset).config, sizes, tuple(kernel) if kernel else tuple(BENCHMARKS))
        get_storage(get_output_dir(output)).write_csv(REPORT_FILE, report)

    console.print(frame_table(
        "benchmarks",
        ("kernel", "size", "reference (s)", "candidate (s)", "ratio", "limit", "passed"),
        [(r.kernel, r.size, r.reference_s, r.candidate_s, r.ratio, r.limit,
          r.passed if r.asserted else "n/a") for r in report.itertuples()],
    ))
    if not report["passed"].all():
        raise typer.Exit(code=BenchmarkError.exit_code)

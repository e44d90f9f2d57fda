# gearsim/commands/common.py
from contextlib import contextmanager
from typing import Dict, Iterable, Iterator, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from gearsim.errors import ConfigError, GearSimError, StorageError
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger("gearsim.commands")

console = Console()


def _validation_message(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        where = ".".join(str(p) for p in err.get("loc", ())) or "config"
        parts.append(f"{where}: {err.get('msg')}")
    return "; ".join(parts)


@contextmanager
def command_errors(action: str) -> Iterator[None]:
    """Map service failures to exit codes: 2 config, 3 numerical, 4 I/O."""
    try:
        yield
    except typer.Exit:
        raise
    except ValidationError as e:
        logger.error(f"{action}: invalid configuration: {_validation_message(e)}")
        raise typer.Exit(code=ConfigError.exit_code)
    except GearSimError as e:
        logger.error(f"{action} failed ({type(e).__name__}): {e}")
        raise typer.Exit(code=e.exit_code)
    except OSError as e:
        logger.error(f"{action}: I/O failure: {e}")
        raise typer.Exit(code=StorageError.exit_code)


def summary_table(title: str, rows: Dict[str, object]) -> Table:
    table = Table(title=title, show_header=False)
    table.add_column("key", style="bold")
    table.add_column("value")
    for key, value in rows.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    return table


def frame_table(title: str, columns: Iterable[str], rows: Iterable[Iterable[object]],
                caption: Optional[str] = None) -> Table:
    table = Table(title=title, caption=caption)
    for col in columns:
        table.add_column(col)
    for row in rows:
        table.add_row(*(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
    return table

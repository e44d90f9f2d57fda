# gearsim/services/storage_service.py
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd

from gearsim.errors import StorageError
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"


class StorageService:
    """File artifacts under one root directory. Every write lands atomically (temp file + rename)."""

    def __init__(self, root: PathLike):
        self.root = Path(root)

    def path(self, *parts: PathLike) -> Path:
        return self.root.joinpath(*parts)

    def ensure_dir(self, *parts: PathLike) -> Path:
        target = self.path(*parts)
        try:
            target.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Cannot create directory {target}: {e}", exc_info=True)
            raise StorageError(f"cannot create directory {target}: {e}") from e
        return target

    def exists(self, *parts: PathLike) -> bool:
        return self.path(*parts).exists()

    def remove(self, relative: PathLike) -> None:
        target = self.path(relative)
        try:
            target.unlink(missing_ok=True)
        except OSError as e:
            logger.error(f"Cannot remove {target}: {e}")
            raise StorageError(f"cannot remove {target}: {e}") from e
        logger.debug(f"Removed {target}")

    def write_text(self, relative: PathLike, text: str) -> Path:
        target = self.path(relative)
        self.ensure_dir(target.parent)
        tmp_name = None
        try:
            with tempfile.NamedTemporaryFile(
                "w", encoding="utf-8", newline="", dir=target.parent, prefix=f".{target.name}.", delete=False
            ) as handle:
                tmp_name = handle.name
                handle.write(text)
            os.replace(tmp_name, target)
        except OSError as e:
            if tmp_name and os.path.exists(tmp_name):
                os.unlink(tmp_name)
            logger.error(f"Failed to write {target}: {e}", exc_info=True)
            raise StorageError(f"cannot write {target}: {e}") from e
        logger.debug(f"Wrote {target}")
        return target

    def write_json(self, relative: PathLike, payload: Dict[str, Any]) -> Path:
        return self.write_text(relative, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_csv(self, relative: PathLike, frame: pd.DataFrame) -> Path:
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return self.write_text(relative, text)

    def read_json(self, relative: PathLike) -> Dict[str, Any]:
        target = self.path(relative)
        try:
            with open(target, encoding="utf-8") as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Failed to read {target}: {e}")
            raise StorageError(f"cannot read {target}: {e}") from e

    def read_csv(self, relative: PathLike) -> pd.DataFrame:
        target = self.path(relative)
        try:
            return pd.read_csv(target, float_precision="round_trip")
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            logger.error(f"Failed to read {target}: {e}")
            raise StorageError(f"cannot read {target}: {e}") from e

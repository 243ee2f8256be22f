"""
Run store: one output directory per run id with an artifact index

Every artifact written through the store is recorded in index.json with its size and
SHA-256, so two runs of the same config can be compared by index alone.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd
from pydantic import BaseModel

from checkpoint import checkpoint_write
from config import CHECKPOINT_SUFFIX, DEFAULT_OUT_DIR, INDEX_JSON
from spectral_core import RealField
from utils import compute_file_hash, format_file_size, format_time_tag, sanitize_run_id

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def to_jsonable(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="python")
    if isinstance(data, dict):
        return {str(k): to_jsonable(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_jsonable(v) for v in data]
    if hasattr(data, "item"):  # numpy scalars
        return data.item()
    return data


class RunStore:
    """
    Output directory <out_dir>/<run_id> with an index of written artifacts
    """

    def __init__(self, out_dir: Union[str, Path] = DEFAULT_OUT_DIR, run_id: str = "run"):
        """
        Initialize the run directory

        Args:
            out_dir: Parent directory of all runs
            run_id: Run identifier; sanitized before use
        """
        self.run_id = sanitize_run_id(run_id)
        self.run_dir = Path(out_dir) / self.run_id
        self.run_dir.mkdir(parents=True, exist_ok=True)

        self._index_file = self.run_dir / INDEX_JSON
        self._index: Dict[str, Dict[str, Any]] = {}
        self._load_index()

        logger.info(f"Run store initialized: {self.run_dir}")

    def _load_index(self):
        """Load an existing index so reruns extend rather than orphan it"""
        if not self._index_file.exists():
            return
        try:
            with open(self._index_file, "r", encoding="utf-8") as f:
                self._index = json.load(f)
            logger.info(f"Loaded {len(self._index)} artifacts from run index")
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Failed to load run index: {e}")
            self._index = {}

    def _save_index(self):
        with open(self._index_file, "w", encoding="utf-8") as f:
            json.dump(self._index, f, indent=2, sort_keys=True)
            f.write("\n")

    def path(self, name: str) -> Path:
        return self.run_dir / name

    def record(self, name: str, kind: str) -> Path:
        """Hash an artifact already written under the run directory and index it"""
        path = self.path(name)
        size = path.stat().st_size
        self._index[name] = {"kind": kind, "bytes": size, "sha256": compute_file_hash(path)}
        self._save_index()
        logger.info(f"Wrote {kind} artifact {name} ({format_file_size(size)})")
        return path

    def write_json(self, name: str, data: Any) -> Path:
        payload = json.dumps(to_jsonable(data), indent=2, sort_keys=True)
        self.path(name).write_text(payload + "\n", encoding="utf-8")
        return self.record(name, "json")

    def write_csv(self, name: str, table: pd.DataFrame) -> Path:
        """CSV with a header row; floats printed with round-trip precision"""
        table.to_csv(
            self.path(name), index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
        )
        return self.record(name, "csv")

    def write_checkpoint(
        self, field: RealField, t: float, beta: float, name: Optional[str] = None
    ) -> Path:
        name = name or f"omega_{format_time_tag(t)}{CHECKPOINT_SUFFIX}"
        checkpoint_write(self.path(name), field, t, beta)
        return self.record(name, "checkpoint")

    @property
    def artifacts(self) -> Dict[str, Dict[str, Any]]:
        return dict(self._index)

    def digest(self, name: str) -> Optional[str]:
        entry = self._index.get(name)
        return entry["sha256"] if entry else None

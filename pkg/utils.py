"""
Utility functions for the beta-plane laboratory
"""

import hashlib
import logging
import os
import re
from pathlib import Path

logger = logging.getLogger(__name__)

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


def sanitize_run_id(run_id: str) -> str:
    """
    Turn an arbitrary label into a filesystem-safe run id

    Args:
        run_id: Original label

    Returns:
        Label with directory components removed and unsafe characters replaced by '_'
    """
    run_id = os.path.basename(run_id.strip())
    safe = _UNSAFE.sub("_", run_id).lstrip(".")
    if safe != run_id:
        logger.warning(f"Run id {run_id!r} sanitized to {safe!r}")
    return safe or "run"


def compute_file_hash(file_path: Path) -> str:
    """
    Compute SHA256 hash of a file

    Args:
        file_path: Path to the file

    Returns:
        Hexadecimal hash string
    """
    sha256_hash = hashlib.sha256()
    with open(file_path, "rb") as f:
        for byte_block in iter(lambda: f.read(65536), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


def format_file_size(size_bytes: float) -> str:
    """Human-readable size, e.g. "1.5 MB" """
    for unit in ["B", "KB", "MB", "GB"]:
        if size_bytes < 1024.0:
            return f"{size_bytes:.1f} {unit}"
        size_bytes /= 1024.0
    return f"{size_bytes:.1f} TB"


def format_time_tag(t: float) -> str:
    """Stable file-name tag for a simulation time: 0.5 -> 't0.5', 40 -> 't40'"""
    return "t" + f"{t:.10g}".replace("+", "")

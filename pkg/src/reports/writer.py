"""
Deterministic report writing.

JSON is rendered by hand so floats always use 17 significant digits and the
same report object always produces the same bytes. Files are rendered in
memory, written to temporary files in the output directory and only then
moved into place, so a failure never leaves a partial report behind.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.core.exceptions import ReportWriteError
from src.protocols.worker import ShotRecord
from src.reports.models import RunReport

logger = logging.getLogger(__name__)

REPORT_FILENAME = "report.json"
SHOTS_FILENAME = "shots.csv"
SHOTS_HEADER = ["shot", "steps", "completed", "phase_class"]


def _render(value: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)

    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ReportWriteError(f"Cannot write non-finite number {value}")
        text = format(value, ".17g")
        # Keep floats recognizable as floats
        if "e" not in text and "." not in text and "n" not in text:
            text += ".0"
        return text
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_render(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(_render(v, indent + 1) for v in value) + "]"
        items = [f"{inner}{_render(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    # numpy scalars and friends
    if hasattr(value, "item"):
        return _render(value.item(), indent)
    raise ReportWriteError(f"Cannot serialize {type(value).__name__}")


def render_report(report: RunReport) -> str:
    """Report as deterministic JSON text (trailing newline included)."""
    return _render(report.model_dump(), 0) + "\n"


def render_shots_csv(records: Sequence[ShotRecord]) -> str:
    """Per-shot CSV with header shot,steps,completed,phase_class."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SHOTS_HEADER)
    for r in records:
        writer.writerow([r.shot, r.steps, "true" if r.completed else "false", r.phase_class.value])
    return buffer.getvalue()


def _write_atomic(files: Dict[Path, str], directory: Path) -> None:
    staged: List[tuple] = []
    try:
        for target, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=directory)
            staged.append((tmp, target))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        for tmp, target in staged:
            os.replace(tmp, target)
    except OSError as e:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise ReportWriteError(f"Failed to write report files in {directory}: {e}")


def write_report(
    report: RunReport, output_path: str, shots: Optional[Sequence[ShotRecord]] = None
) -> Path:
    """
    Write report.json (and shots.csv when ``shots`` is given) into ``output_path``.

    Returns:
        Path of the written report.json

    Raises:
        ReportWriteError: Rendering or writing failed; no files are left behind
    """
    directory = Path(output_path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(f"Cannot create output directory {directory}: {e}")

    files: Dict[Path, str] = {}
    if shots is not None:
        report = report.model_copy(update={"shots_file": SHOTS_FILENAME})
        files[directory / SHOTS_FILENAME] = render_shots_csv(shots)
    files[directory / REPORT_FILENAME] = render_report(report)

    _write_atomic(files, directory)
    logger.info(f"Report written to {directory / REPORT_FILENAME}")
    return directory / REPORT_FILENAME

"""Report documents: a JSON form for machines and a plain-text listing."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .timeutil import format_timestamp

FORMATS = {"json": "json", "text": "txt"}


def comment_to_dict(c):
    d = {"type": c.type, "plan_id": c.plan_id, "scores": dict(sorted(c.scores.items())), "text": c.text}
    if c.end is not None:
        d["interval"] = [format_timestamp(c.time), format_timestamp(c.end)]
    else:
        d["time"] = format_timestamp(c.time)
    if c.step_id is not None:
        d["step_id"] = c.step_id
    if c.concept_id is not None:
        d["concept_id"] = c.concept_id
    if c.row is not None:
        d["row"] = c.row
    return d


def report_to_dict(report):
    doc = {
        "patient_id": report.patient_id,
        "config_echo": report.config_echo,
        "comments": [comment_to_dict(c) for c in report.comments],
        "statistics": dict(sorted(report.statistics.items())),
    }
    if report.debug is not None:
        doc["debug"] = report.debug
    return doc


def _text(report):
    echo = report.config_echo
    lines = [f"patient {report.patient_id}",
             f"library {echo.get('library_version', '')} ({echo.get('library_hash', '')})"]
    for c in report.comments:
        when = format_timestamp(c.time)
        if c.end is not None:
            when += f"..{format_timestamp(c.end)}"
        scores = " ".join(f"{k}={v:.3f}" for k, v in sorted(c.scores.items()))
        lines.append(f"{when}  {c.type:<32} {c.plan_id or '-':<20} {scores}  {c.text}")
    lines.append("statistics:")
    for k, v in sorted(report.statistics.items()):
        lines.append(f"  {k}: {v}")
    return "\n".join(lines) + "\n"


def emit_report(report, fmt="json"):
    """Serialize a :class:`CritiqueReport`; ``fmt`` is ``json`` or ``text``."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        return _text(report)
    raise ValueError(f"unknown report format {fmt!r}")


def report_filename(patient_id, fmt="json"):
    return f"{patient_id}.report.{FORMATS[fmt]}"


def atomic_write(path, text):
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path

"""Line-delimited JSON reading/writing shared by all pipeline stages.

Stage artifacts may start with a single header line of the form
``{"_meta": {...}}`` carrying the stage name and seed; readers skip it.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator


class JsonlError(ValueError):
    """Malformed line-delimited JSON input."""


def read_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, record) for each data line.

    Blank lines and a leading ``_meta`` header are skipped. A line that is
    not a JSON object raises JsonlError naming the line.
    """
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise JsonlError(f"line {lineno}: expected a JSON object")
            if lineno == 1 and set(record) == {"_meta"}:
                continue
            yield lineno, record


def write_records(
    path: str | Path,
    records: Iterable[dict],
    meta: dict[str, Any] | None = None,
) -> int:
    """Write records one JSON object per line; returns the record count.

    When ``meta`` is given it is written first as ``{"_meta": meta}``.
    Keys are sorted so identical inputs produce identical bytes.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True, ensure_ascii=False) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count


def dump_document(path: str | Path | None, document: dict) -> str:
    """Serialize a single JSON document (reports, stats); path None → return only."""
    text = json.dumps(document, sort_keys=True, ensure_ascii=False, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text

"""Corpus ingestion.

The corpus is a UTF-8 JSON-lines file, one paper per line:

    {"id": "conf/x/Doe01", "title": "...", "abstract": "...", "year": 2001,
     "references": ["conf/x/A", 17], "award": true}

`id` may be a string or an integer, `abstract` and `award` are optional
(award defaults to false). Malformed lines are skipped with a counted
warning; a duplicate id is a fatal corpus error.

External ids are interned to non-negative 64-bit integers so that every
id-keyed file (embedding files in particular) can be produced by
independent tools without a shared lookup table. The interning rule,
which any producer must replicate, is:

* an integer id, or a string that is a canonical decimal integer
  ("0" or no leading zero), interns to its numeric value if that value
  is below 2**53 (exactly representable everywhere, including IEEE-754
  doubles);
* any other string interns to the first 8 bytes of SHA-256 of its UTF-8
  encoding, read as a little-endian unsigned 64-bit integer.

Integer ids at or above 2**53 are rejected as malformed because their
textual form is not reproducible by JSON parsers that use doubles.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

MAX_NUMERIC_ID = 2**53

_DECIMAL_RE = re.compile(r"^(0|[1-9][0-9]*)$")


class CorpusError(ValueError):
    """Fatal corpus defect (duplicate id, empty corpus)."""


def intern_id(raw: str | int) -> int:
    """Intern an external paper id to a non-negative 64-bit integer."""
    if isinstance(raw, bool):
        raise TypeError("boolean is not a valid paper id")
    if isinstance(raw, int):
        if 0 <= raw < MAX_NUMERIC_ID:
            return raw
        raise ValueError(f"integer id {raw} outside [0, 2**53)")
    text = str(raw)
    if _DECIMAL_RE.match(text):
        value = int(text)
        if value < MAX_NUMERIC_ID:
            return value
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class PaperRecord:
    """One corpus entry, ids already interned."""

    id: int
    title: str
    abstract: str | None
    year: int
    references: list[int]
    award: bool
    raw_id: str  # id as written in the corpus, for human-readable output


@dataclass
class CorpusLoad:
    records: list[PaperRecord]
    skipped: int  # malformed lines


def _parse_line(obj: object) -> PaperRecord:
    """Validate one decoded JSON line. Raises ValueError on any defect."""
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    raw = obj.get("id")
    if not isinstance(raw, (str, int)) or isinstance(raw, bool):
        raise ValueError("missing or non-string/int id")
    pid = intern_id(raw)
    title = obj.get("title")
    if not isinstance(title, str):
        raise ValueError("missing or non-string title")
    year = obj.get("year")
    if not isinstance(year, int) or isinstance(year, bool):
        raise ValueError("missing or non-integer year")
    refs_raw = obj.get("references")
    if not isinstance(refs_raw, list):
        raise ValueError("missing or non-array references")
    refs: list[int] = []
    seen: set[int] = set()
    for entry in refs_raw:
        if not isinstance(entry, (str, int)) or isinstance(entry, bool):
            raise ValueError("reference is not a string or integer")
        rid = intern_id(entry)
        if rid == pid or rid in seen:
            continue  # self-citations and duplicates are dropped
        seen.add(rid)
        refs.append(rid)
    award = obj.get("award", False)
    if award is None:
        award = False
    if not isinstance(award, bool):
        raise ValueError("award is not a boolean")
    abstract = obj.get("abstract")
    if abstract is not None and not isinstance(abstract, str):
        raise ValueError("abstract is not a string")
    return PaperRecord(
        id=pid,
        title=title,
        abstract=abstract,
        year=year,
        references=refs,
        award=award,
        raw_id=str(raw),
    )


def load_corpus(path: str | Path) -> CorpusLoad:
    """Read a JSON-lines corpus file.

    Returns the valid records in file order plus the count of skipped
    malformed lines. Duplicate ids abort with CorpusError; an unreadable
    file raises the underlying OSError.
    """
    records: list[PaperRecord] = []
    skipped = 0
    seen_ids: dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = _parse_line(json.loads(line))
            except ValueError as exc:
                skipped += 1
                logger.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc)
                continue
            if rec.id in seen_ids:
                raise CorpusError(
                    f"{path}:{lineno}: duplicate paper id {rec.raw_id!r} "
                    f"(first seen as {seen_ids[rec.id]!r})"
                )
            seen_ids[rec.id] = rec.raw_id
            records.append(rec)
    if skipped:
        logger.warning("%s: skipped %d malformed line(s)", path, skipped)
    return CorpusLoad(records=records, skipped=skipped)

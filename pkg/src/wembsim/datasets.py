"""JSON-lines dataset records for the evaluation harness.

One JSON object per line; unknown fields are ignored. Schemas::

    scoring:     {"image_id", "candidate", "references": [...]}
    systems:     {"system_id", "instances": [scoring...], "human_scores": {"M1", "M2"}}
    pairwise:    {"caption_a", "caption_b", "reference_pool": [...],
                  "human_prefers": "A"|"B", "category": "HHC"|"HHI"}
    distraction: {"correct", "distractor", "references": [...],
                  "category": "SP"|"SS"|"JP"|"JS"}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, TypeVar

T = TypeVar("T")

PAIRWISE_CATEGORIES = ("HHC", "HHI")
DISTRACTION_CATEGORIES = ("SP", "SS", "JP", "JS")
HUMAN_TARGETS = ("M1", "M2")


class RecordError(ValueError):
    pass


class UnknownCategoryError(RecordError):
    pass


def _text(obj, key):
    if key not in obj:
        raise RecordError(f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise RecordError(f"field {key!r} must be a string")
    return value


def _text_list(obj, key, min_len=1):
    value = obj.get(key)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise RecordError(f"field {key!r} must be a list of strings")
    if len(value) < min_len:
        raise RecordError(f"field {key!r} needs at least {min_len} entries, got {len(value)}")
    return list(value)


@dataclass(frozen=True)
class ScoringInstance:
    image_id: str
    candidate: str
    references: List[str]

    @classmethod
    def from_json(cls, obj: dict) -> "ScoringInstance":
        if "image_id" not in obj:
            raise RecordError("missing field 'image_id'")
        return cls(str(obj["image_id"]), _text(obj, "candidate"), _text_list(obj, "references"))


@dataclass(frozen=True)
class SystemEntry:
    system_id: str
    instances: List[ScoringInstance]
    human_scores: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict) -> "SystemEntry":
        if "system_id" not in obj:
            raise RecordError("missing field 'system_id'")
        raw = obj.get("instances")
        if not isinstance(raw, list) or not raw:
            raise RecordError("field 'instances' must be a non-empty list")
        instances = [ScoringInstance.from_json(x) for x in raw]
        human = obj.get("human_scores") or {}
        if not isinstance(human, dict):
            raise RecordError("field 'human_scores' must be an object")
        scores = {}
        for k, v in human.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise RecordError(f"human score {k!r} must be numeric")
            scores[k] = float(v)
        return cls(str(obj["system_id"]), instances, scores)


@dataclass(frozen=True)
class PairwiseInstance:
    caption_a: str
    caption_b: str
    reference_pool: List[str]
    human_prefers: str
    category: str

    @classmethod
    def from_json(cls, obj: dict) -> "PairwiseInstance":
        prefers = _text(obj, "human_prefers").upper()
        if prefers not in ("A", "B"):
            raise RecordError(f"human_prefers must be 'A' or 'B', got {prefers!r}")
        category = _text(obj, "category").upper()
        if category not in PAIRWISE_CATEGORIES:
            raise UnknownCategoryError(f"unknown pairwise category {category!r}")
        return cls(
            _text(obj, "caption_a"),
            _text(obj, "caption_b"),
            _text_list(obj, "reference_pool"),
            prefers,
            category,
        )


@dataclass(frozen=True)
class DistractionInstance:
    correct: str
    distractor: str
    references: List[str]
    category: str

    @classmethod
    def from_json(cls, obj: dict) -> "DistractionInstance":
        category = _text(obj, "category").upper()
        if category not in DISTRACTION_CATEGORIES:
            raise UnknownCategoryError(f"unknown distraction category {category!r}")
        correct, distractor = _text(obj, "correct"), _text(obj, "distractor")
        if correct == distractor:
            raise RecordError("correct and distractor captions are identical")
        return cls(correct, distractor, _text_list(obj, "references"), category)


@dataclass
class ReadResult:
    records: list
    errors: List[Tuple[int, str]] = field(default_factory=list)


def read_jsonl(path, parse: Callable[[dict], T], fatal: Tuple[type, ...] = ()) -> ReadResult:
    """Parse every non-blank line with ``parse``.

    Lines that fail are collected in ``errors`` as ``(line_number, message)``
    unless the exception is an instance of one of ``fatal``, which propagates.
    ``OSError`` and ``UnicodeDecodeError`` always propagate.
    """
    result = ReadResult(records=[])
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise RecordError("line is not a JSON object")
                result.records.append(parse(obj))
            except fatal:
                raise
            except (json.JSONDecodeError, RecordError) as exc:
                result.errors.append((lineno, str(exc)))
    return result


def write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def human_score(entry: SystemEntry, target: str) -> Optional[float]:
    return entry.human_scores.get(target)

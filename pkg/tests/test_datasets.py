import json

import pytest

from wembsim.datasets import (
    DistractionInstance,
    PairwiseInstance,
    RecordError,
    ScoringInstance,
    SystemEntry,
    UnknownCategoryError,
    read_jsonl,
)


def test_scoring_instance():
    inst = ScoringInstance.from_json({"image_id": 7, "candidate": "a b", "references": ["c"], "extra": 1})
    assert inst == ScoringInstance("7", "a b", ["c"])
    with pytest.raises(RecordError):
        ScoringInstance.from_json({"image_id": 1, "candidate": "a", "references": []})
    with pytest.raises(RecordError):
        ScoringInstance.from_json({"candidate": "a", "references": ["b"]})


def test_system_entry():
    e = SystemEntry.from_json({
        "system_id": "s1",
        "instances": [{"image_id": "i", "candidate": "x", "references": ["y"]}],
        "human_scores": {"M1": 0.5, "M2": 1},
    })
    assert e.human_scores == {"M1": 0.5, "M2": 1.0}
    with pytest.raises(RecordError):
        SystemEntry.from_json({"system_id": "s", "instances": []})
    with pytest.raises(RecordError):
        SystemEntry.from_json({"system_id": "s", "instances": [{"image_id": 1, "candidate": "a", "references": ["b"]}],
                               "human_scores": {"M1": "high"}})


def test_pairwise_instance():
    obj = {"caption_a": "a", "caption_b": "b", "reference_pool": ["r"] * 5, "human_prefers": "b", "category": "hhi"}
    p = PairwiseInstance.from_json(obj)
    assert p.human_prefers == "B" and p.category == "HHI"
    with pytest.raises(UnknownCategoryError):
        PairwiseInstance.from_json({**obj, "category": "MM"})
    with pytest.raises(RecordError):
        PairwiseInstance.from_json({**obj, "human_prefers": "C"})


def test_distraction_instance():
    obj = {"correct": "a man", "distractor": "a man on a beach", "references": ["x"], "category": "SS"}
    assert DistractionInstance.from_json(obj).category == "SS"
    with pytest.raises(UnknownCategoryError):
        DistractionInstance.from_json({**obj, "category": "XX"})
    with pytest.raises(RecordError):
        DistractionInstance.from_json({**obj, "distractor": "a man"})


def test_read_jsonl_tallies_bad_rows(write):
    good = json.dumps({"image_id": 1, "candidate": "a", "references": ["b"]})
    path = write("in.jsonl", good + "\nnot json\n\n[1, 2]\n" + good + "\n")
    res = read_jsonl(path, ScoringInstance.from_json)
    assert len(res.records) == 2
    assert [line for line, _ in res.errors] == [2, 4]


def test_read_jsonl_fatal(write):
    path = write("d.jsonl", json.dumps({"correct": "a", "distractor": "b", "references": ["c"], "category": "Q"}) + "\n")
    with pytest.raises(UnknownCategoryError):
        read_jsonl(path, DistractionInstance.from_json, fatal=(UnknownCategoryError,))

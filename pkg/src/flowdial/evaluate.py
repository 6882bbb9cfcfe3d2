"""Exact-match scoring of next-state predictions.

A prediction is correct iff its normalized text equals the normalized gold
next state.  Accuracy is reported overall and split by sample type, plus
backward-distance buckets when the corpus contains backward transitions.
Missing predictions count as wrong (and are reported), so evaluation is
total over the gold set.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .formats import StateCodeDict, resolve_label
from .synth import DialogueSample

_TERMINATORS = ".。;；"
_WS_RUN = re.compile(r"\s+")


def normalize_state(
    text: str,
    code_dict: StateCodeDict | None = None,
    strict: bool = False,
) -> str:
    """Canonical form for exact-match comparison.

    NFC + trim always; unless strict, also strip trailing sentence
    terminators and collapse whitespace runs.  Codes resolve only when a
    dictionary is given, so corpora whose labels merely look like codes are
    left alone.  Idempotent.
    """
    text = unicodedata.normalize("NFC", text).strip()
    if strict:
        return text
    text = _WS_RUN.sub(" ", text.rstrip(_TERMINATORS).rstrip())
    if code_dict is None:
        return text
    resolved = resolve_label(text, code_dict)
    if resolved != text:
        resolved = unicodedata.normalize("NFC", resolved).strip()
        resolved = _WS_RUN.sub(" ", resolved.rstrip(_TERMINATORS).rstrip())
    return resolved


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    predicted_next_state: str


@dataclass(frozen=True)
class BucketCount:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float | None:
        """Percentage, or None for an empty bucket."""
        if self.total == 0:
            return None
        return 100.0 * self.correct / self.total

    def add(self, correct: bool) -> "BucketCount":
        return BucketCount(self.correct + (1 if correct else 0), self.total + 1)

    def to_dict(self) -> dict:
        return {"correct": self.correct, "total": self.total, "accuracy": self.accuracy}

    @classmethod
    def from_dict(cls, data: dict) -> "BucketCount":
        return cls(data["correct"], data["total"])


@dataclass(frozen=True)
class EvalReport:
    overall: BucketCount
    sequential: BucketCount
    decision: BucketCount
    backward_lt: BucketCount
    backward_ge: BucketCount
    missing: int
    dist_threshold: int
    per_flowchart: dict[str, BucketCount] = field(default_factory=dict)

    @property
    def acc(self) -> float | None:
        return self.overall.accuracy

    @property
    def sequential_acc(self) -> float | None:
        return self.sequential.accuracy

    @property
    def decision_acc(self) -> float | None:
        return self.decision.accuracy

    @property
    def backward_acc_lt5(self) -> float | None:
        return self.backward_lt.accuracy

    @property
    def backward_acc_ge5(self) -> float | None:
        return self.backward_ge.accuracy

    @property
    def has_backward(self) -> bool:
        return self.backward_lt.total + self.backward_ge.total > 0

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "sequential": self.sequential.to_dict(),
            "decision": self.decision.to_dict(),
            "backward_lt": self.backward_lt.to_dict(),
            "backward_ge": self.backward_ge.to_dict(),
            "missing": self.missing,
            "dist_threshold": self.dist_threshold,
            "per_flowchart": {
                fid: b.to_dict() for fid, b in sorted(self.per_flowchart.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            overall=BucketCount.from_dict(data["overall"]),
            sequential=BucketCount.from_dict(data["sequential"]),
            decision=BucketCount.from_dict(data["decision"]),
            backward_lt=BucketCount.from_dict(data["backward_lt"]),
            backward_ge=BucketCount.from_dict(data["backward_ge"]),
            missing=data["missing"],
            dist_threshold=data["dist_threshold"],
            per_flowchart={
                fid: BucketCount.from_dict(b)
                for fid, b in data["per_flowchart"].items()
            },
        )


def evaluate(
    gold: Sequence[DialogueSample],
    predictions: Sequence[Prediction],
    dist_threshold: int = 5,
    strict: bool = False,
) -> EvalReport:
    by_id: dict[str, Prediction] = {}
    for pred in predictions:
        if pred.sample_id in by_id:
            raise ValueError(f"duplicate prediction for sample {pred.sample_id!r}")
        by_id[pred.sample_id] = pred
    gold_ids = {s.id for s in gold}
    unknown = set(by_id) - gold_ids
    if unknown:
        raise ValueError(f"predictions reference unknown samples: {sorted(unknown)!r}")

    overall = BucketCount()
    sequential = BucketCount()
    decision = BucketCount()
    backward_lt = BucketCount()
    backward_ge = BucketCount()
    per_flowchart: dict[str, BucketCount] = {}
    missing = 0

    for sample in gold:
        code_dict = StateCodeDict(sample.state_dict) if sample.state_dict else None
        pred = by_id.get(sample.id)
        if pred is None:
            missing += 1
            correct = False
        else:
            correct = normalize_state(
                pred.predicted_next_state, code_dict, strict
            ) == normalize_state(sample.next_state, code_dict, strict)
        overall = overall.add(correct)
        if sample.sample_type == "decision":
            decision = decision.add(correct)
        else:
            sequential = sequential.add(correct)
        if sample.backward and sample.backward_distance is not None:
            if sample.backward_distance < dist_threshold:
                backward_lt = backward_lt.add(correct)
            else:
                backward_ge = backward_ge.add(correct)
        per_flowchart[sample.flowchart_id] = per_flowchart.get(
            sample.flowchart_id, BucketCount()
        ).add(correct)

    return EvalReport(
        overall=overall,
        sequential=sequential,
        decision=decision,
        backward_lt=backward_lt,
        backward_ge=backward_ge,
        missing=missing,
        dist_threshold=dist_threshold,
        per_flowchart=per_flowchart,
    )


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_report(report: EvalReport, layout: str = "text") -> str:
    """Text layout mirrors the results-table column order; json is the full
    report object and parses back to an equal report."""
    if layout == "json":
        return json.dumps(report.to_dict(), ensure_ascii=False, indent=2)
    if layout != "text":
        raise ValueError(f"unknown layout {layout!r}")
    headers = ["Acc", "Decision Acc", "Sequential Acc"]
    values = [_fmt(report.acc), _fmt(report.decision_acc), _fmt(report.sequential_acc)]
    if report.has_backward:
        thr = report.dist_threshold
        headers += [f"Backward Acc(Dist <{thr})", f"Backward Acc(Dist >={thr})"]
        values += [_fmt(report.backward_acc_lt5), _fmt(report.backward_acc_ge5)]
    lines = [
        "  ".join(headers),
        "  ".join(values),
        f"samples={report.overall.total} missing={report.missing}",
    ]
    return "\n".join(lines)


def read_predictions(path: str | Path) -> list[Prediction]:
    """JSONL of {"sample_id": ..., "predicted_next_state": ...}."""
    out: list[Prediction] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                data = json.loads(line)
                out.append(Prediction(data["sample_id"], data["predicted_next_state"]))
    return out


def write_predictions(predictions: Iterable[Prediction], path: str | Path) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for pred in predictions:
            fh.write(
                json.dumps(
                    {
                        "sample_id": pred.sample_id,
                        "predicted_next_state": pred.predicted_next_state,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            count += 1
    return count

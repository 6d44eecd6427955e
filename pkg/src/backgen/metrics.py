"""Benchmark metrics over per-sample run records.

PassRate uses the n-sample estimator ``1 - C(n-c, 1) / C(n, 1)`` per task
(which reduces to c/n) averaged over tasks. AvgPassRatio is the mean over
tasks of the mean over samples of the per-test pass fraction, so every task
weighs the same regardless of its test count or sample count. CCP is the
fraction of all generated samples that compile.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb
from typing import List, Sequence

MODE_ROCODE = "rocode"
MODE_PLAIN = "plain_sampling"
MODE_FILTERING = "sampling_filtering"

MODES = (MODE_ROCODE, MODE_PLAIN, MODE_FILTERING)


@dataclass
class SampleRecord:
    """One generated sample and everything needed to rescore it."""

    final_code: str
    status: str
    compilable: bool
    tests_passed: int
    tests_total: int
    tokens_consumed: int
    rollback_count: int = 0

    def __post_init__(self):
        if self.tests_passed > self.tests_total:
            raise ValueError("passed count exceeds total test count")

    @property
    def all_passed(self) -> bool:
        return self.tests_total > 0 and self.tests_passed == self.tests_total

    def to_json(self) -> dict:
        return {
            "final_code": self.final_code,
            "status": self.status,
            "compilable": self.compilable,
            "tests_passed": self.tests_passed,
            "tests_total": self.tests_total,
            "tokens_consumed": self.tokens_consumed,
            "rollback_count": self.rollback_count,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SampleRecord":
        return cls(**data)


@dataclass
class RunRecord:
    """All samples drawn for one task under one mode."""

    task_id: str
    mode: str
    samples: List[SampleRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    def to_json(self) -> dict:
        return {"task_id": self.task_id, "mode": self.mode,
                "samples": [s.to_json() for s in self.samples]}

    @classmethod
    def from_json(cls, data: dict) -> "RunRecord":
        return cls(data["task_id"], data["mode"],
                   [SampleRecord.from_json(s) for s in data["samples"]])


def pass_rate(records: Sequence[RunRecord]) -> float:
    """Mean over tasks of ``1 - C(n-c, 1) / C(n, 1)``.

    c counts samples whose private tests all pass; n must be >= 1 everywhere.
    """
    if not records:
        raise ValueError("pass_rate needs at least one task record")
    values = []
    for record in records:
        n = len(record.samples)
        if n == 0:
            raise ValueError(f"task {record.task_id} has no samples")
        c = sum(1 for s in record.samples if s.all_passed)
        values.append(1.0 - comb(n - c, 1) / comb(n, 1))
    return sum(values) / len(values)


def avg_pass_ratio(records: Sequence[RunRecord]) -> float:
    """Mean over tasks of the per-sample mean test-pass fraction.

    Tasks without any scored tests are excluded with a warning.
    """
    if not records:
        raise ValueError("avg_pass_ratio needs at least one task record")
    values = []
    for record in records:
        if not record.samples:
            raise ValueError(f"task {record.task_id} has no samples")
        ratios = [s.tests_passed / s.tests_total
                  for s in record.samples if s.tests_total > 0]
        if not ratios:
            warnings.warn(f"task {record.task_id} has no scored tests; "
                          "excluded from AvgPassRatio")
            continue
        values.append(sum(ratios) / len(ratios))
    if not values:
        raise ValueError("no task had scored tests")
    return sum(values) / len(values)


def ccp(records: Sequence[RunRecord]) -> float:
    """Compilable samples over all samples."""
    total = sum(len(r.samples) for r in records)
    if total == 0:
        raise ValueError("ccp needs at least one sample")
    compilable = sum(1 for r in records for s in r.samples if s.compilable)
    return compilable / total


def compute_all(records: Sequence[RunRecord]) -> dict:
    return {"pass_rate": pass_rate(records),
            "avg_pass_ratio": avg_pass_ratio(records),
            "ccp": ccp(records)}

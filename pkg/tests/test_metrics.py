import itertools
import warnings
from fractions import Fraction

import pytest

from backgen.metrics import (MODE_ROCODE, RunRecord, SampleRecord,
                             avg_pass_ratio, ccp, pass_rate)


def sample(passed, total, compilable=True):
    return SampleRecord("code", "eos", compilable, passed, total, 10)


def record(task_id, samples):
    rec = RunRecord(task_id, MODE_ROCODE)
    rec.samples = list(samples)
    return rec


def record_from_counts(task_id, counts, total):
    return record(task_id, [sample(c, total) for c in counts])


def test_pass_rate_all_pass():
    records = [record_from_counts(f"t{i}", [3], 3) for i in range(4)]
    assert pass_rate(records) == 1.0


def test_pass_rate_single_task_one_of_four():
    # 1 - C(3,1)/C(4,1) = 0.25
    rec = record("t", [sample(2, 2)] + [sample(0, 2)] * 3)
    assert pass_rate([rec]) == 0.25


def test_pass_rate_mean_over_tasks():
    recs = [record("a", [sample(1, 1)]), record("b", [sample(0, 1)])]
    assert pass_rate(recs) == 0.5


def test_pass_rate_rejects_empty():
    with pytest.raises(ValueError):
        pass_rate([])
    with pytest.raises(ValueError):
        pass_rate([record("t", [])])


def test_avg_pass_ratio_single_task():
    assert avg_pass_ratio([record("t", [sample(3, 4)])]) == 0.75


def test_avg_pass_ratio_mean_of_means():
    recs = [record("a", [sample(2, 2)]), record("b", [sample(1, 2)])]
    assert avg_pass_ratio(recs) == 0.75


def test_avg_pass_ratio_excludes_untested_tasks_with_warning():
    recs = [record("a", [sample(1, 2)]), record("b", [sample(0, 0)])]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert avg_pass_ratio(recs) == 0.5
    assert any("b" in str(w.message) for w in caught)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ValueError):
            avg_pass_ratio([record("b", [sample(0, 0)])])


def test_ccp():
    recs = [record("t", [sample(0, 1, compilable=(i != 0))
                         for i in range(100)])]
    assert ccp(recs) == 0.99
    with pytest.raises(ValueError):
        ccp([record("t", [])])


def test_sample_validation():
    with pytest.raises(ValueError):
        SampleRecord("c", "eos", True, 3, 2, 1)
    with pytest.raises(ValueError):
        RunRecord("t", "warp_drive")


def test_round_trip_json():
    rec = record("t", [sample(1, 2), sample(2, 2, compilable=False)])
    clone = RunRecord.from_json(rec.to_json())
    assert clone == rec


# -- brute-force oracles ------------------------------------------------------

def brute_pass_rate(cs, n):
    """Independent oracle: mean of c/n as exact fractions."""
    return sum(Fraction(c, n) for c in cs) / len(cs)


def brute_avg_pass_ratio(count_matrix, tests):
    """Independent oracle: explicit double sum with exact fractions."""
    total = Fraction(0)
    for task_counts in count_matrix:
        task_sum = Fraction(0)
        for c in task_counts:
            task_sum += Fraction(c, tests)
        total += task_sum / len(task_counts)
    return total / len(count_matrix)


def test_pass_rate_matches_oracle_exhaustively():
    for tasks in (1, 2, 3):
        for n in (1, 2, 3, 4):
            for cs in itertools.product(range(n + 1), repeat=tasks):
                records = [record(f"t{i}",
                                  [sample(1, 1)] * c + [sample(0, 1)] * (n - c))
                           for i, c in enumerate(cs)]
                got = pass_rate(records)
                assert got == pytest.approx(float(brute_pass_rate(cs, n)),
                                            abs=1e-12)


def test_avg_pass_ratio_matches_oracle_exhaustively_small():
    tests = 2
    for tasks in (1, 2):
        for samples in (1, 2):
            space = itertools.product(range(tests + 1), repeat=samples)
            per_task = list(space)
            for matrix in itertools.product(per_task, repeat=tasks):
                records = [record_from_counts(f"t{i}", counts, tests)
                           for i, counts in enumerate(matrix)]
                got = avg_pass_ratio(records)
                want = float(brute_avg_pass_ratio(matrix, tests))
                assert got == pytest.approx(want, abs=1e-12)

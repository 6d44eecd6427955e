"""Rollback-point selection.

Two candidate targets exist when a check fails: the reported error location,
and the start of the line holding the highest-entropy token on the active
path. The error location is preferred unless it is missing or the same error
just recurred, in which case the entropy target breaks the loop by refreshing
the most uncertain decision.
"""

from __future__ import annotations

import math
from typing import Sequence

from .decoding import SUM_TOLERANCE, TokenDistribution
from .errors import DistributionError, EngineError
from .trie import GenerationTree, RollbackPoint

# Per-token entropies along the active path, aligned with step index.
EntropyTrace = Sequence[float]


def entropy(dist: TokenDistribution) -> float:
    """Shannon entropy in nats, with 0 * log(0) taken as 0."""
    total = sum(dist.probs.values())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise DistributionError(f"distribution sums to {total}, not 1")
    h = 0.0
    for p in dist.probs.values():
        if p > 0.0:
            h -= p * math.log(p)
    return max(0.0, h)


def _same_failure(a, b) -> bool:
    return (a.result == b.result == "failure"
            and (a.error_type, a.lineno, a.offset)
            == (b.error_type, b.lineno, b.offset))


def choose_rollback(reports, trace: EntropyTrace,
                    tree: GenerationTree) -> RollbackPoint:
    """Pick the rollback point for the latest failure report.

    ``reports`` is the check history in event order; only the last two entries
    matter. Recurrence means the last two reports are failures agreeing on
    (error_type, lineno, offset).
    """
    if not reports:
        raise EngineError("choose_rollback called with no reports")
    last = reports[-1]
    if last.result != "failure":
        raise EngineError("choose_rollback requires a failure report")
    recurred = len(reports) > 1 and _same_failure(last, reports[-2])

    if last.lineno is not None and not recurred:
        return RollbackPoint(last.lineno, last.offset if last.offset else 0)

    if not trace:
        raise EngineError("entropy rollback on an empty path")
    # Earliest argmax wins to free the most context.
    t_star = 0
    best = trace[0]
    for t, h in enumerate(trace):
        if h > best:
            t_star, best = t, h
    return RollbackPoint(tree.token_index_to_lineno(t_star), 0)

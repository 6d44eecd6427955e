"""Penalty-constrained step distributions and the sampling policies.

The constraint multiplies each token probability by its accumulated penalty
and renormalizes; the policies (greedy / temperature / top-k / nucleus) then
act on the constrained distribution, so penalties can evict tokens from a
top-k or nucleus support.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Mapping, Tuple

from .errors import DistributionError, EngineError

SUM_TOLERANCE = 1e-6

GREEDY = "greedy"
TEMPERATURE = "temperature"
TOP_K = "top_k"
NUCLEUS = "nucleus"


@dataclass(frozen=True)
class TokenDistribution:
    """A (possibly sparse) probability vector over the vocabulary.

    Token ids absent from ``probs`` have probability zero. Entries must be
    nonnegative and sum to 1 within 1e-6.
    """

    probs: Mapping[int, float]
    vocab_size: int

    def __post_init__(self):
        if not self.probs:
            raise DistributionError("empty distribution")
        total = 0.0
        for tid, p in self.probs.items():
            if p < 0.0:
                raise DistributionError(f"negative probability {p} for token {tid}")
            total += p
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionError(f"distribution sums to {total}, not 1")

    def items_by_prob(self) -> List[Tuple[int, float]]:
        """Descending probability, ties broken toward the smaller token id."""
        return sorted(self.probs.items(), key=lambda kv: (-kv[1], kv[0]))

    def argmax(self) -> int:
        return self.items_by_prob()[0][0]


@dataclass(frozen=True)
class SamplingPolicy:
    """Token selection policy. ``temperature == 0`` is defined as greedy."""

    kind: str = GREEDY
    temperature: float = 1.0
    k: int = 1
    top_p: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in (GREEDY, TEMPERATURE, TOP_K, NUCLEUS):
            raise ValueError(f"unknown sampling policy {self.kind!r}")
        if self.kind == TEMPERATURE and self.temperature < 0.0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.kind == TOP_K and self.k < 1:
            raise ValueError(f"top-k k must be >= 1, got {self.k}")
        if self.kind == NUCLEUS and not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"nucleus p must lie in (0, 1], got {self.top_p}")

    @classmethod
    def parse(cls, spec: str, rng_seed: int = 0) -> "SamplingPolicy":
        """Parse CLI notation: greedy | temp:T | topk:K | nucleus:P."""
        if spec == "greedy":
            return cls(GREEDY, rng_seed=rng_seed)
        name, _, arg = spec.partition(":")
        if name == "temp":
            return cls(TEMPERATURE, temperature=float(arg), rng_seed=rng_seed)
        if name == "topk":
            return cls(TOP_K, k=int(arg), rng_seed=rng_seed)
        if name == "nucleus":
            return cls(NUCLEUS, top_p=float(arg), rng_seed=rng_seed)
        raise ValueError(f"unknown policy spec {spec!r}")


def constrain(dist: TokenDistribution,
              penalties: Mapping[int, float]) -> TokenDistribution:
    """Multiply every probability by its penalty (missing entries count as 1)
    and renormalize."""
    weighted = {tid: p * penalties.get(tid, 1.0) for tid, p in dist.probs.items()}
    denom = sum(weighted.values())
    if denom <= 0.0:
        # Unreachable while the penalty floor holds; guard against logic bugs.
        raise EngineError("constrained distribution has zero total mass")
    return TokenDistribution({tid: w / denom for tid, w in weighted.items()},
                             dist.vocab_size)


def _draw(items: List[Tuple[int, float]], rng: random.Random) -> int:
    """Inverse-CDF draw over (token, weight) pairs; weights must sum to ~1."""
    r = rng.random()
    cum = 0.0
    for tid, w in items:
        cum += w
        if r < cum:
            return tid
    return items[-1][0]


def _renormalized(items: List[Tuple[int, float]]) -> List[Tuple[int, float]]:
    total = sum(w for _, w in items)
    return [(tid, w / total) for tid, w in items]


def sample(dist: TokenDistribution, policy: SamplingPolicy,
           rng: random.Random) -> int:
    """Pick the next token id under ``policy``. Greedy ties break toward the
    smaller token id so a fixed seed always reproduces the same sequence."""
    if policy.kind == GREEDY or (policy.kind == TEMPERATURE
                                 and policy.temperature == 0.0):
        return dist.argmax()

    if policy.kind == TEMPERATURE:
        # Log-domain rescaling avoids underflow for small probabilities.
        items = [(tid, p) for tid, p in dist.items_by_prob() if p > 0.0]
        logs = [math.log(p) / policy.temperature for _, p in items]
        peak = max(logs)
        weights = [math.exp(v - peak) for v in logs]
        total = sum(weights)
        return _draw([(tid, w / total) for (tid, _), w in zip(items, weights)], rng)

    if policy.kind == TOP_K:
        kept = dist.items_by_prob()[:policy.k]
        return _draw(_renormalized(kept), rng)

    if policy.kind == NUCLEUS:
        kept: List[Tuple[int, float]] = []
        cum = 0.0
        for tid, p in dist.items_by_prob():
            if kept and cum + p > policy.top_p + 1e-9:
                break
            kept.append((tid, p))
            cum += p
        return _draw(_renormalized(kept), rng)

    raise EngineError(f"unhandled policy kind {policy.kind!r}")

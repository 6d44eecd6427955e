"""Token-probability sources.

Tokenization belongs to the provider: the engine only sees opaque
(token_id, token_text) pairs whose texts concatenate losslessly. The prompt is
encoded with reserved negative ids so providers can split it from generated
text without the engine caring.

``ScriptedModel`` is the deterministic test double: an ordered rule table
mapping the generated-so-far text to the next step distribution.
``RemoteProvider`` adapts a completion-with-logprobs HTTP endpoint; the top-N
surfaced log-probabilities are exponentiated and renormalized, all other
tokens get probability zero.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .decoding import TokenDistribution
from .errors import ContextOverflowError, ProviderError

# (token_id, token_text); ids < 0 are reserved for prompt chunks.
Token = Tuple[int, str]

PROMPT_CHUNK_ID = -1
EOS_TOKEN_ID = 0

# Rule-table alias for the end-of-sequence token, whose decoded text is empty.
EOS_TEXT = "<eos>"


@dataclass(frozen=True)
class ProviderProfile:
    """Vocabulary table plus the EOS id and the context ceiling."""

    vocabulary: Dict[int, str]
    eos_token_id: int
    max_context_length: int = 4096

    def __post_init__(self):
        if self.eos_token_id not in self.vocabulary:
            raise ValueError("EOS token id missing from the vocabulary")

    def text_of(self, token_id: int) -> str:
        return self.vocabulary[token_id]


def split_context(context: Sequence[Token]) -> Tuple[str, str]:
    """(prompt_text, generated_text) from an encoded context."""
    prompt = "".join(text for tid, text in context if tid < 0)
    generated = "".join(text for tid, text in context if tid >= 0)
    return prompt, generated


@dataclass(frozen=True)
class ScriptRule:
    """First matching rule wins. ``match`` is one of exact/prefix/regex and is
    tested against the generated text (the decoded context minus the prompt).
    """

    match: str
    pattern: str
    dist: Dict[str, float]  # token text (EOS_TEXT for end) -> probability

    def applies(self, generated: str) -> bool:
        if self.match == "exact":
            return generated == self.pattern
        if self.match == "prefix":
            return generated.startswith(self.pattern)
        if self.match == "regex":
            return re.search(self.pattern, generated) is not None
        raise ValueError(f"unknown rule match kind {self.match!r}")


class ScriptedModel:
    """Deterministic scripted distribution source for tests and demos."""

    def __init__(self, rules: Sequence[ScriptRule],
                 fallback: Optional[Dict[str, float]] = None,
                 max_context_length: int = 4096):
        self.rules = list(rules)
        self.fallback = dict(fallback) if fallback else {EOS_TEXT: 1.0}
        texts = sorted(({t for rule in self.rules for t in rule.dist}
                        | set(self.fallback)) - {EOS_TEXT})
        vocab = {EOS_TOKEN_ID: ""}
        self._id_of = {EOS_TEXT: EOS_TOKEN_ID}
        for i, text in enumerate(texts, start=1):
            vocab[i] = text
            self._id_of[text] = i
        self.profile = ProviderProfile(vocab, EOS_TOKEN_ID, max_context_length)

    def encode_prompt(self, text: str) -> List[Token]:
        return [(PROMPT_CHUNK_ID, text)] if text else []

    def next_distribution(self, context: Sequence[Token]) -> TokenDistribution:
        if len(context) >= self.profile.max_context_length:
            raise ContextOverflowError(
                f"context length {len(context)} at provider maximum")
        _, generated = split_context(context)
        for rule in self.rules:
            if rule.applies(generated):
                chosen = rule.dist
                break
        else:
            chosen = self.fallback
        probs = {self._id_of[text]: p for text, p in chosen.items()}
        return TokenDistribution(probs, vocab_size=len(self.profile.vocabulary))

    # -- JSON round trip for the CLI's scripted:file provider -------------

    def to_json(self) -> dict:
        return {
            "max_context_length": self.profile.max_context_length,
            "rules": [{"match": r.match, "pattern": r.pattern, "dist": r.dist}
                      for r in self.rules],
            "fallback": self.fallback,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScriptedModel":
        rules = [ScriptRule(r["match"], r["pattern"], dict(r["dist"]))
                 for r in data.get("rules", [])]
        return cls(rules, data.get("fallback"),
                   data.get("max_context_length", 4096))


class RemoteProvider:
    """Client for a completion endpoint that returns top-N log-probabilities.

    The request carries the decoded context as the prompt string and asks for
    one token with ``logprobs`` candidates; the adapter normalizes whatever
    token/text/logprob triples come back into the engine's distribution
    contract. Retries are bounded; a dead endpoint aborts the session.
    """

    def __init__(self, url: str, n_logprobs: int = 20, model: Optional[str] = None,
                 eos_texts: Sequence[str] = ("</s>", "<|endoftext|>"),
                 max_context_length: int = 4096, retries: int = 3,
                 timeout: float = 30.0):
        self.url = url
        self.n_logprobs = n_logprobs
        self.model = model
        self.eos_texts = set(eos_texts)
        self.retries = retries
        self.timeout = timeout
        self._vocab: Dict[int, str] = {EOS_TOKEN_ID: ""}
        self._id_of: Dict[str, int] = {}
        self.profile = ProviderProfile(self._vocab, EOS_TOKEN_ID,
                                       max_context_length)

    def encode_prompt(self, text: str) -> List[Token]:
        return [(PROMPT_CHUNK_ID, text)] if text else []

    def _intern(self, text: str) -> int:
        if text in self.eos_texts:
            return EOS_TOKEN_ID
        tid = self._id_of.get(text)
        if tid is None:
            tid = len(self._vocab)
            self._vocab[tid] = text
            self._id_of[text] = tid
        return tid

    def _post(self, payload: dict) -> dict:
        import requests

        last_exc: Optional[Exception] = None
        for attempt in range(self.retries):
            try:
                resp = requests.post(self.url, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, json.JSONDecodeError) as exc:
                last_exc = exc
                time.sleep(min(2.0, 0.2 * 2 ** attempt))
        raise ProviderError(f"endpoint failed after {self.retries} retries: {last_exc}")

    def next_distribution(self, context: Sequence[Token]) -> TokenDistribution:
        if len(context) >= self.profile.max_context_length:
            raise ContextOverflowError(
                f"context length {len(context)} at provider maximum")
        prompt_text = "".join(text for _, text in context)
        payload = {"prompt": prompt_text, "max_tokens": 1,
                   "logprobs": self.n_logprobs, "temperature": 0.0}
        if self.model:
            payload["model"] = self.model
        data = self._post(payload)
        try:
            top = data["choices"][0]["logprobs"]["top_logprobs"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed logprobs response: {exc}")
        if not top:
            raise ProviderError("endpoint returned no logprob candidates")
        # Exponentiate and renormalize the surfaced candidates; everything
        # else in the vocabulary implicitly has probability zero.
        peak = max(top.values())
        weights = {text: math.exp(lp - peak) for text, lp in top.items()}
        total = sum(weights.values())
        probs: Dict[int, float] = {}
        for text, w in weights.items():
            tid = self._intern(text)
            probs[tid] = probs.get(tid, 0.0) + w / total
        return TokenDistribution(probs, vocab_size=max(len(self._vocab),
                                                       len(probs)))

"""The generation loop: sample a statement, check it, roll back on failure,
penalize the abandoned path, and regenerate, until EOS or the token budget.

One session is strictly sequential and owns its tree, RNG stream, and
analyzer client; run sessions in parallel by giving each its own set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .decoding import SamplingPolicy, constrain, sample
from .detection import (CheckPhase, Detector, ErrorReport, StatementSegmenter,
                        TestCase)
from .errors import (AnalyzerError, ContextOverflowError, EngineError,
                     ProviderError)
from .rollback import choose_rollback, entropy
from .sandbox import SandboxClient
from .trie import PENALTY_FLOOR, GenerationTree, RollbackPoint

STATUS_EOS = "eos"
STATUS_BUDGET = "budget_exhausted"
STATUS_INFRA = "infrastructure_error"

ROLLBACK_STRATEGIC = "strategic"
ROLLBACK_RESTART = "restart"
ROLLBACK_ERROR_STATEMENT = "error_statement"
ROLLBACK_ENTROPY_STATEMENT = "entropy_statement"
ROLLBACK_TOKEN_DISABLE = "token_disable"

ROLLBACK_VARIANTS = (ROLLBACK_STRATEGIC, ROLLBACK_RESTART,
                     ROLLBACK_ERROR_STATEMENT, ROLLBACK_ENTROPY_STATEMENT,
                     ROLLBACK_TOKEN_DISABLE)


@dataclass(frozen=True)
class SessionConfig:
    """Knobs for one generation session.

    ``decay`` is the penalty base applied per step past a rollback point;
    the total budget is ``budget_multiplier * max_generation_length`` tokens,
    counting every emitted token including later rolled-back ones.
    ``penalties_enabled`` and ``rollback_variant`` exist for the ablation
    modes; ``exponent_offset`` shifts the penalty exponent (0 reproduces the
    published decay schedule, under which the first regenerated position is
    untouched).
    """

    decay: float = 0.9
    budget_multiplier: int = 2
    max_generation_length: int = 512
    policy: SamplingPolicy = field(default_factory=SamplingPolicy)
    repetition_threshold: int = 5
    statement_timeout_ms: int = 2000
    penalties_enabled: bool = True
    exponent_offset: int = 0
    rollback_variant: str = ROLLBACK_STRATEGIC
    strict_output: bool = False
    memory_limit_mb: int = 256

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay factor must lie in (0, 1), got {self.decay}")
        if self.budget_multiplier < 1:
            raise ValueError("budget multiplier must be >= 1")
        if self.max_generation_length < 1:
            raise ValueError("max generation length must be >= 1")
        if self.repetition_threshold < 1:
            raise ValueError("repetition threshold must be >= 1")
        if self.rollback_variant not in ROLLBACK_VARIANTS:
            raise ValueError(f"unknown rollback variant {self.rollback_variant!r}")

    @property
    def budget(self) -> int:
        return self.budget_multiplier * self.max_generation_length


@dataclass
class GenerationResult:
    final_code: str
    status: str
    tokens_consumed: int
    rollback_count: int
    reports: Tuple[ErrorReport, ...]
    entropies: Tuple[float, ...]
    tree: GenerationTree

    def __post_init__(self):
        if self.final_code != self.tree.final_code():
            raise EngineError("result text diverged from the tree's active path")


def _entry_defined(code: str, entry_point: Optional[str]) -> bool:
    if entry_point is None:
        return True
    return f"def {entry_point}" in code


class _Session:
    def __init__(self, task, provider, config: SessionConfig,
                 client: SandboxClient):
        if getattr(task, "private_tests", ()):
            raise EngineError(
                "generation must receive a redacted task without private tests")
        self.task = task
        self.provider = provider
        self.config = config
        self.tree = GenerationTree()
        self.segmenter = StatementSegmenter()
        self.rng = random.Random(config.policy.rng_seed)
        self.detector = Detector(client, entry_point=task.entry_point,
                                 strict_output=config.strict_output,
                                 memory_limit_mb=config.memory_limit_mb)
        self.prompt_tokens = provider.encode_prompt(task.prompt)
        self.eos_id = provider.profile.eos_token_id
        self.public_tests: Tuple[TestCase, ...] = tuple(task.public_tests)

    # -- statement generation ---------------------------------------------

    def _context(self):
        return self.prompt_tokens + [(n.token_id, n.token_text)
                                     for n in self.tree.path_nodes()]

    def _emit_statement(self) -> Tuple[bool, Optional[str]]:
        """Extend the path until a boundary, EOS, or the budget.

        Returns (eos_seen, exhausted_status): ``exhausted_status`` is one of
        None / STATUS_BUDGET and ends the session when set mid-statement.
        """
        while True:
            if self.tree.total_tokens_emitted >= self.config.budget:
                return False, STATUS_BUDGET
            try:
                dist = self.provider.next_distribution(self._context())
            except ContextOverflowError:
                return False, STATUS_BUDGET
            step_entropy = entropy(dist)
            if self.config.penalties_enabled:
                step_dist = constrain(
                    dist, self.tree.child_penalty_vector(self.tree.current))
            else:
                step_dist = dist
            token_id = sample(step_dist, self.config.policy, self.rng)
            text = self.provider.profile.text_of(token_id)
            self.tree.append_token(token_id, text, step_entropy)
            if token_id == self.eos_id:
                return True, None
            if self.segmenter.feed(text):
                return False, None

    # -- checking -----------------------------------------------------------

    def _check_statement(self, final: bool) -> ErrorReport:
        code = self.tree.final_code()
        timeout = self.config.statement_timeout_ms
        report = self.detector.detect(code, CheckPhase.STATIC_ONLY,
                                      timeout_ms=timeout,
                                      allow_incomplete=not final)
        if report.failed:
            return report
        report = self.detector.detect_repetition(
            code, self.config.repetition_threshold)
        if report.failed:
            return report
        # Execution checks use public inputs only, and only once the partial
        # program both compiles completely and defines the entry point.
        if self.public_tests and _entry_defined(code, self.task.entry_point) \
                and self.detector.compiles(code):
            report = self.detector.detect(code, CheckPhase.RUN_WITH_INPUT,
                                          tests=self.public_tests,
                                          timeout_ms=timeout)
            if report.failed:
                return report
        if final:
            with_outputs = [c for c in self.public_tests
                            if c.expected_output is not None]
            if with_outputs:
                report = self.detector.detect(code, CheckPhase.FULL_TESTS,
                                              tests=with_outputs,
                                              timeout_ms=timeout)
                if report.failed:
                    return report
        return ErrorReport.ok()

    # -- rollback -----------------------------------------------------------

    def _trace(self):
        return [n.entropy for n in self.tree.path_nodes()]

    def _entropy_point(self) -> RollbackPoint:
        trace = self._trace()
        if not trace:
            raise EngineError("entropy rollback on an empty path")
        t_star = max(range(len(trace)), key=lambda t: (trace[t], -t))
        return RollbackPoint(self.tree.token_index_to_lineno(t_star), 0)

    def _perform_rollback(self, report: ErrorReport):
        variant = self.config.rollback_variant
        tree = self.tree
        if variant == ROLLBACK_TOKEN_DISABLE:
            trace = self._trace()
            if not trace:
                raise EngineError("entropy rollback on an empty path")
            t_star = max(range(len(trace)), key=lambda t: (trace[t], -t))
            path = tree.path_nodes()
            disabled = path[t_star]
            node = tree.rollback_to_node(path[t_star - 1] if t_star else tree.root)
            disabled.penalty = PENALTY_FLOOR
            return node

        if variant == ROLLBACK_STRATEGIC:
            point = choose_rollback(tree.reports, self._trace(), tree)
        elif variant == ROLLBACK_RESTART:
            point = RollbackPoint(1, 0)
        elif variant == ROLLBACK_ERROR_STATEMENT:
            point = (RollbackPoint(report.lineno, 0)
                     if report.lineno is not None else self._entropy_point())
        elif variant == ROLLBACK_ENTROPY_STATEMENT:
            point = self._entropy_point()
        else:
            raise EngineError(f"unhandled rollback variant {variant!r}")

        node = tree.rollback_to(point)
        if node is tree.current and node is not tree.root \
                and not tree._last_abandoned:
            # The point resolved to the head itself; force one token of
            # progress so regeneration cannot spin in place.
            node = tree.rollback_to_node(node.parent)
        if self.config.penalties_enabled:
            tree.apply_penalties(node, self.config.decay,
                                 self.config.exponent_offset)
        return node

    # -- main loop ------------------------------------------------------------

    def run(self) -> GenerationResult:
        status = None
        try:
            while status is None:
                eos_seen, exhausted = self._emit_statement()
                if exhausted is not None:
                    status = exhausted
                    break
                self.tree.mark_statement()
                report = self._check_statement(final=eos_seen)
                self.tree.reports.append(report)
                if not report.failed:
                    if eos_seen:
                        status = STATUS_EOS
                    continue
                if self.tree.total_tokens_emitted >= self.config.budget:
                    status = STATUS_BUDGET
                    break
                self._perform_rollback(report)
                self.segmenter.reset_to(self.tree.decoded_text())
        except (ProviderError, AnalyzerError):
            status = STATUS_INFRA
        return GenerationResult(
            final_code=self.tree.final_code(),
            status=status,
            tokens_consumed=self.tree.total_tokens_emitted,
            rollback_count=self.tree.rollback_count,
            reports=tuple(self.tree.reports),
            entropies=tuple(n.entropy for n in self.tree.path_nodes()),
            tree=self.tree,
        )


def generate(task, provider, config: SessionConfig,
             client: SandboxClient) -> GenerationResult:
    """Run one full generation session for ``task`` against ``provider``."""
    return _Session(task, provider, config, client).run()

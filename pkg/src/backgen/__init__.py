"""Backtracking code generation: statement-level error detection, strategic
rollback over a generation trie, and penalty-constrained regeneration."""

from .decoding import SamplingPolicy, TokenDistribution, constrain, sample
from .detection import CheckPhase, Detector, ErrorReport, StatementSegmenter, TestCase
from .engine import GenerationResult, SessionConfig, generate
from .errors import (AnalyzerError, ContextOverflowError, DistributionError,
                     EngineError, ProviderError)
from .harness import TaskSpec, load_tasks, run_benchmark, run_task
from .metrics import RunRecord, SampleRecord, avg_pass_ratio, ccp, pass_rate
from .providers import ProviderProfile, RemoteProvider, ScriptedModel, ScriptRule
from .rollback import choose_rollback, entropy
from .sandbox import SandboxClient
from .trie import GenerationTree, RollbackPoint, TokenNode

__version__ = "0.1.0"

__all__ = [
    "AnalyzerError", "CheckPhase", "ContextOverflowError", "Detector",
    "DistributionError", "EngineError", "ErrorReport", "GenerationResult",
    "GenerationTree", "ProviderError", "ProviderProfile", "RemoteProvider",
    "RollbackPoint", "RunRecord", "SampleRecord", "SamplingPolicy",
    "SandboxClient", "ScriptRule", "ScriptedModel", "SessionConfig",
    "StatementSegmenter", "TaskSpec", "TestCase", "TokenDistribution",
    "TokenNode", "avg_pass_ratio", "ccp", "choose_rollback", "constrain",
    "entropy", "generate", "load_tasks", "pass_rate", "run_benchmark",
    "run_task", "sample",
]

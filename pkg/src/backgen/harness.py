"""Benchmark runner: loads JSONL task files, drives one of the three modes
(backtracking engine, plain sampling, sampling+filtering) over each task,
scores samples against private tests in the sandbox, and emits a
machine-readable results document plus a text summary.

Private tests never reach the generation path: every mode generates from a
redacted task copy and only the scorer sees the full task.
"""

from __future__ import annotations

import json
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .decoding import sample
from .detection import TestCase, build_run_program
from .engine import (STATUS_BUDGET, STATUS_EOS, STATUS_INFRA,
                     SessionConfig, generate)
from .errors import AnalyzerError, ContextOverflowError, ProviderError
from .metrics import (MODE_FILTERING, MODE_PLAIN, MODE_ROCODE, RunRecord,
                      SampleRecord, compute_all)
from .providers import ScriptedModel
from .sandbox import SandboxClient

RESULTS_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TaskSpec:
    """One benchmark task. ``public_tests`` may lack expected outputs (then
    they are execution-only probes); ``private_tests`` always carry outputs
    and are reserved for scoring."""

    task_id: str
    prompt: str
    public_tests: Tuple[TestCase, ...] = ()
    private_tests: Tuple[TestCase, ...] = ()
    entry_point: Optional[str] = None

    def redacted(self) -> "TaskSpec":
        return replace(self, private_tests=())

    def to_json(self) -> dict:
        def dump(case: TestCase) -> dict:
            d = {"input": case.input}
            if case.expected_output is not None:
                d["expected_output"] = case.expected_output
            return d

        data = {"task_id": self.task_id, "prompt": self.prompt,
                "public_tests": [dump(c) for c in self.public_tests],
                "private_tests": [dump(c) for c in self.private_tests]}
        if self.entry_point:
            data["entry_point"] = self.entry_point
        return data

    @classmethod
    def from_json(cls, data: dict) -> "TaskSpec":
        def load(d: dict) -> TestCase:
            return TestCase(d["input"], d.get("expected_output"))

        return cls(data["task_id"], data["prompt"],
                   tuple(load(c) for c in data.get("public_tests", [])),
                   tuple(load(c) for c in data.get("private_tests", [])),
                   data.get("entry_point"))


def load_tasks(path: str) -> List[TaskSpec]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                tasks.append(TaskSpec.from_json(json.loads(line)))
    return tasks


def save_tasks(tasks: Sequence[TaskSpec], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(task.to_json(), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def score_sample(client: SandboxClient, task: TaskSpec, final_code: str,
                 timeout_ms: int = 2000) -> Tuple[bool, int, int]:
    """(compilable, private tests passed, private tests total)."""
    compilable = client.request("compile", final_code)["result"] == "success"
    passed = 0
    total = len(task.private_tests)
    if compilable:
        for case in task.private_tests:
            program, stdin = build_run_program(final_code, task.entry_point, case)
            resp = client.request("run_tests", program, test_input=stdin,
                                  expected_output=case.expected_output,
                                  timeout_ms=timeout_ms)
            if resp["result"] == "success":
                passed += 1
    return compilable, passed, total


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def _plain_sample(task: TaskSpec, provider, config: SessionConfig,
                  seed: int, token_cap: int) -> Tuple[str, str, int]:
    """Draw one straight-through sample without detection or rollback.

    Returns (text, status, tokens_used). ``token_cap`` bounds this sample on
    top of the per-sample maximum generation length.
    """
    policy = replace(config.policy, rng_seed=seed)
    rng = random.Random(seed)
    prompt = provider.encode_prompt(task.prompt)
    profile = provider.profile
    tokens: List[Tuple[int, str]] = []
    text_parts: List[str] = []
    cap = min(config.max_generation_length, token_cap)
    used = 0
    status = STATUS_BUDGET
    while used < cap:
        try:
            dist = provider.next_distribution(prompt + tokens)
        except ContextOverflowError:
            break
        token_id = sample(dist, policy, rng)
        used += 1
        if token_id == profile.eos_token_id:
            status = STATUS_EOS
            break
        text = profile.text_of(token_id)
        tokens.append((token_id, text))
        text_parts.append(text)
    return "".join(text_parts), status, used


def _public_score(client: SandboxClient, task: TaskSpec, code: str,
                  timeout_ms: int) -> int:
    """Filtering selector: count public cases the candidate gets through
    (output compare when the case has an expected output, otherwise a clean
    execution)."""
    score = 0
    for case in task.public_tests:
        program, stdin = build_run_program(code, task.entry_point, case)
        if case.expected_output is not None:
            resp = client.request("run_tests", program, test_input=stdin,
                                  expected_output=case.expected_output,
                                  timeout_ms=timeout_ms)
        else:
            resp = client.request("run", program, test_input=stdin,
                                  timeout_ms=timeout_ms)
        if resp["result"] == "success":
            score += 1
    return score


def run_task(task: TaskSpec, provider, config: SessionConfig, mode: str,
             client: SandboxClient, n_samples: int = 1,
             seed: int = 0) -> RunRecord:
    """Generate ``n_samples`` for one task under ``mode`` and score them."""
    record = RunRecord(task.task_id, mode)
    redacted = task.redacted()
    for i in range(n_samples):
        sample_seed = seed + i
        try:
            if mode == MODE_ROCODE:
                cfg = replace(config,
                              policy=replace(config.policy, rng_seed=sample_seed))
                result = generate(redacted, provider, cfg, client)
                code, status = result.final_code, result.status
                tokens, rollbacks = result.tokens_consumed, result.rollback_count
            elif mode == MODE_PLAIN:
                code, status, tokens = _plain_sample(
                    redacted, provider, config, sample_seed,
                    config.max_generation_length)
                rollbacks = 0
            elif mode == MODE_FILTERING:
                code, status, tokens = _filtering_sample(
                    redacted, provider, config, client, sample_seed)
                rollbacks = 0
            else:
                raise ValueError(f"unknown mode {mode!r}")
        except (ProviderError, AnalyzerError):
            record.samples.append(SampleRecord(
                "", STATUS_INFRA, False, 0, len(task.private_tests), 0))
            continue
        compilable, passed, total = score_sample(
            client, task, code, config.statement_timeout_ms)
        record.samples.append(SampleRecord(
            code, status, compilable, passed, total, tokens, rollbacks))
    return record


def _filtering_sample(task: TaskSpec, provider, config: SessionConfig,
                      client: SandboxClient, seed: int) -> Tuple[str, str, int]:
    """Sampling+filtering under the same total token budget as the engine:
    keep drawing plain samples until the budget is spent, then keep the one
    that fares best on the public tests."""
    budget = config.budget
    used = 0
    candidates: List[Tuple[str, str]] = []
    draw = 0
    while used < budget:
        code, status, tokens = _plain_sample(
            task, provider, config, seed + 7919 * draw, budget - used)
        used += tokens
        draw += 1
        candidates.append((code, status))
        if tokens == 0:
            break
    best = max(
        enumerate(candidates),
        key=lambda pair: (_public_score(client, task, pair[1][0],
                                        config.statement_timeout_ms),
                          -pair[0]))
    code, status = best[1]
    return code, status, used


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

ProviderFactory = Callable[[TaskSpec], object]


def scripted_provider_factory(models: Dict[str, dict],
                              default: Optional[dict] = None) -> ProviderFactory:
    """Factory over a {task_id: scripted model json} table."""

    def factory(task: TaskSpec):
        data = models.get(task.task_id, default)
        if data is None:
            raise ProviderError(f"no scripted model for task {task.task_id}")
        return ScriptedModel.from_json(data)

    return factory


def load_scripted_models(path: str) -> ProviderFactory:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return scripted_provider_factory(doc.get("tasks", {}), doc.get("default"))


def run_benchmark(tasks: Sequence[TaskSpec], mode: str,
                  config: SessionConfig, provider_factory: ProviderFactory,
                  parallelism: int = 1, n_samples: int = 1, trials: int = 1,
                  base_seed: int = 0,
                  sandbox_command: Optional[List[str]] = None) -> dict:
    """Run every task under ``mode``; repeat ``trials`` times with distinct
    seeds and average the metrics. Per-task failures are recorded as
    infrastructure samples, never abort the sweep."""
    local = threading.local()
    clients: List[SandboxClient] = []
    lock = threading.Lock()

    def get_client() -> SandboxClient:
        client = getattr(local, "client", None)
        if client is None:
            client = SandboxClient(sandbox_command)
            local.client = client
            with lock:
                clients.append(client)
        return client

    def one_task(args) -> RunRecord:
        index, task, trial_seed = args
        try:
            provider = provider_factory(task)
            return run_task(task, provider, config, mode, get_client(),
                            n_samples=n_samples, seed=trial_seed + 131 * index)
        except (ProviderError, AnalyzerError):
            record = RunRecord(task.task_id, mode)
            record.samples = [
                SampleRecord("", STATUS_INFRA, False, 0,
                             len(task.private_tests), 0)
                for _ in range(n_samples)]
            return record

    trials_out = []
    try:
        for trial in range(trials):
            trial_seed = base_seed + 10007 * trial
            jobs = [(i, task, trial_seed) for i, task in enumerate(tasks)]
            if parallelism > 1:
                with ThreadPoolExecutor(max_workers=parallelism) as pool:
                    records = list(pool.map(one_task, jobs))
            else:
                records = [one_task(job) for job in jobs]
            records.sort(key=lambda r: r.task_id)
            trials_out.append({"trial": trial, "seed": trial_seed,
                               "records": [r.to_json() for r in records],
                               "metrics": compute_all(records)})
    finally:
        for client in clients:
            client.close()

    metric_names = ("pass_rate", "avg_pass_ratio", "ccp")
    averaged = {name: sum(t["metrics"][name] for t in trials_out) / len(trials_out)
                for name in metric_names}
    return {"schema_version": RESULTS_SCHEMA_VERSION, "mode": mode,
            "n_samples": n_samples, "trials": trials_out, "metrics": averaged,
            "config": {"decay": config.decay,
                       "budget_multiplier": config.budget_multiplier,
                       "max_generation_length": config.max_generation_length,
                       "repetition_threshold": config.repetition_threshold,
                       "policy": config.policy.kind,
                       "rollback_variant": config.rollback_variant,
                       "penalties_enabled": config.penalties_enabled}}


def records_from_results(doc: dict, trial: int = 0) -> List[RunRecord]:
    return [RunRecord.from_json(r) for r in doc["trials"][trial]["records"]]


def summarize(doc: dict) -> str:
    lines = [f"mode={doc['mode']} samples={doc['n_samples']} "
             f"trials={len(doc['trials'])}"]
    for name, value in doc["metrics"].items():
        lines.append(f"  {name:>16}: {value:.4f}")
    for t in doc["trials"]:
        m = t["metrics"]
        lines.append(f"  trial {t['trial']} (seed {t['seed']}): "
                     f"pass_rate={m['pass_rate']:.4f} "
                     f"avg_pass_ratio={m['avg_pass_ratio']:.4f} "
                     f"ccp={m['ccp']:.4f}")
    return "\n".join(lines)

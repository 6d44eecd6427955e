"""Bundled scripted benchmark suite.

Twenty small stdin-style tasks, each with one to three injected wrong
branches (syntax, runtime, repeat patterns, wrong final output) and a
reachable correct path. Branch probabilities are tuned against the default
decay of 0.9 so that, under greedy decoding, every task corrects itself in a
known number of rollbacks; those expectations are hand-traced and frozen here
for the end-to-end suite.

The arithmetic behind the tuning: a penalized branch flips once
``p_bad * 0.9^k < p_good`` for the accumulated exponent k. A reported error
column lands the rollback right before the offending token, which therefore
decays from exponent zero (no-op) on the first hit; an error line without a
column (runtime failures) lands at the line start, so mid-line branch tokens
decay from exponent one immediately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .detection import TestCase
from .harness import TaskSpec
from .providers import EOS_TEXT, ScriptRule, ScriptedModel


@dataclass(frozen=True)
class SuiteTask:
    task: TaskSpec
    model_json: dict
    expected_rollbacks: int
    max_generation_length: int = 48


class _Script:
    """Exact-match rule table builder over generated-text prefixes."""

    def __init__(self):
        self.rules: List[ScriptRule] = []

    def seq(self, ctx: str, *tokens: str) -> str:
        for token in tokens:
            self.rules.append(ScriptRule("exact", ctx, {token: 1.0}))
            ctx += token
        return ctx

    def branch(self, ctx: str, options: Dict[str, float]):
        self.rules.append(ScriptRule("exact", ctx, dict(options)))

    def eos(self, ctx: str):
        self.rules.append(ScriptRule("exact", ctx, {EOS_TEXT: 1.0}))

    def model(self) -> ScriptedModel:
        return ScriptedModel(self.rules)


def _cases(*pairs: Tuple[str, str]) -> Tuple[TestCase, ...]:
    return tuple(TestCase(i, o) for i, o in pairs)


def _mid_line_branch_task(task_id: str, prompt: str, s1: str, head: str,
                          bad: str, good: str, p_bad: float, tail: str,
                          public, private, rollbacks: int,
                          extra=None) -> SuiteTask:
    """One statement with a mid-line wrong/right branch after ``s1``.

    ``extra`` optionally appends further (head, bad, good, p_bad, tail)
    statements before EOS for the multi-error tasks.
    """
    s = _Script()
    ctx = s.seq("", s1)
    stmts = [(head, bad, good, p_bad, tail)] + list(extra or [])
    for head_i, bad_i, good_i, p_i, tail_i in stmts:
        ctx = s.seq(ctx, head_i)
        s.branch(ctx, {bad_i: p_i, good_i: round(1.0 - p_i, 6)})
        s.seq(ctx + bad_i, tail_i)
        ctx = s.seq(ctx + good_i, tail_i)
    s.eos(ctx)
    task = TaskSpec(task_id, prompt, _cases(*public), _cases(*private))
    return SuiteTask(task, s.model().to_json(), rollbacks)


def _repetition_task(task_id: str, prompt: str, s1: str, repeat: str,
                     exit_stmt: str, public, private) -> SuiteTask:
    """Greedy path repeats one silent expression statement until the repeat
    check fires (threshold 5), then one rollback steers to the exit. The
    first re-picked repeat survives (exponent-zero decay), so the final
    program keeps exactly one of them."""
    s = _Script()
    base = s.seq("", s1)
    for k in range(7):
        ctx = base + repeat * k
        s.branch(ctx, {repeat: 0.52, exit_stmt: 0.48})
        s.eos(ctx + exit_stmt)
    task = TaskSpec(task_id, prompt, _cases(*public), _cases(*private))
    return SuiteTask(task, s.model().to_json(), expected_rollbacks=1)


def build_suite() -> List[SuiteTask]:
    """The bundled 20-task suite. Every task ends with PassRate/CCP of 1 under
    the default configuration (greedy, decay 0.9, 2x budget)."""
    tasks: List[SuiteTask] = []
    read_two = "a, b = map(int, input().split())\n"

    # Runtime errors with a reported line: one rollback lands at the line
    # start, the branch token sits at decay exponent one, 0.52*0.9 < 0.48.
    tasks.append(_mid_line_branch_task(
        "t01_div_vs_sum", "# print the sum of two integers\n", read_two,
        "print(", "a // b", "a + b", 0.52, ")\n",
        [("8 0", "8\n")], [("8 0", "8\n"), ("3 0", "3\n")], rollbacks=1))
    tasks.append(_mid_line_branch_task(
        "t02_index", "# print the first number\n",
        "xs = [int(v) for v in input().split()]\n",
        "print(", "xs[9]", "xs[0]", 0.52, ")\n",
        [("7 5", "7\n")], [("7 5", "7\n"), ("2 9", "2\n")], rollbacks=1))
    tasks.append(_mid_line_branch_task(
        "t03_name", "# print twice the input\n", "total = int(input())\n",
        "print(", "totl", "total", 0.52, " * 2)\n",
        [("21", "42\n")], [("21", "42\n"), ("5", "10\n")], rollbacks=1))
    tasks.append(_mid_line_branch_task(
        "t04_mod", "# print the difference\n", "n, d = map(int, input().split())\n",
        "print(", "n % d", "n - d", 0.52, ")\n",
        [("9 0", "9\n")], [("9 0", "9\n"), ("4 0", "4\n")], rollbacks=1))

    # Wider margins need a second decay round: 0.55*0.9 > 0.45 > 0.55*0.81.
    tasks.append(_mid_line_branch_task(
        "t05_div_wide", "# print the sum of two integers\n", read_two,
        "print(", "a // b", "a + b", 0.55, ")\n",
        [("6 0", "6\n")], [("6 0", "6\n"), ("2 0", "2\n")], rollbacks=2))
    tasks.append(_mid_line_branch_task(
        "t06_index_wide", "# print the second number\n",
        "xs = [int(v) for v in input().split()]\n",
        "print(", "xs[7]", "xs[1]", 0.55, ")\n",
        [("4 2", "2\n")], [("4 2", "2\n"), ("8 3", "3\n")], rollbacks=2))

    # Syntax errors report a column, so the first rollback lands right before
    # the broken token (exponent-zero no-op); the recurrence guard then takes
    # the entropy target at the line start. One extra rollback than runtime.
    tasks.append(_mid_line_branch_task(
        "t07_paren", "# echo the number\n", "a = int(input())\n",
        "print(", "a))", "a)", 0.52, "\n",
        [("3", "3\n")], [("3", "3\n"), ("11", "11\n")], rollbacks=2))
    tasks.append(_mid_line_branch_task(
        "t08_paren_expr", "# print three times the input\n",
        "w = int(input())\n",
        "print(", "w * 3))", "w * 3)", 0.52, "\n",
        [("3", "9\n")], [("3", "9\n"), ("5", "15\n")], rollbacks=2))
    tasks.append(_mid_line_branch_task(
        "t09_paren_wide", "# echo the number\n", "a = int(input())\n",
        "print(", "a))", "a)", 0.55, "\n",
        [("4", "4\n")], [("4", "4\n"), ("6", "6\n")], rollbacks=3))

    # Repeat patterns: six consecutive silent expression statements trip the
    # threshold-5 check; the rollback point is the first repeated line.
    tasks.append(_repetition_task(
        "t10_repeat", "# print twice the input\n", "a = int(input())\n",
        "a + 1\n", "print(a * 2)\n",
        [("5", "10\n")], [("5", "10\n"), ("7", "14\n")]))
    tasks.append(_repetition_task(
        "t11_repeat", "# print the doubled value\n", "n = int(input())\n",
        "n - 1\n", "print(n + n)\n",
        [("3", "6\n")], [("3", "6\n"), ("10", "20\n")]))

    # Wrong-output branches run clean and only fail the complete test suite
    # at EOS; that report has no location, so the entropy target applies
    # directly and one rollback suffices.
    tasks.append(_mid_line_branch_task(
        "t12_wrong_op", "# print the sum\n", read_two,
        "print(", "a - b", "a + b", 0.52, ")\n",
        [("5 3", "8\n")], [("5 3", "8\n"), ("10 1", "11\n")], rollbacks=1))
    tasks.append(_mid_line_branch_task(
        "t13_wrong_mul", "# print the sum\n", read_two,
        "print(", "a * b", "a + b", 0.52, ")\n",
        [("5 3", "8\n")], [("5 3", "8\n"), ("4 2", "6\n")], rollbacks=1))

    # Two runtime errors in consecutive statements; both fix on their first
    # (location-targeted) rollback, independently.
    tasks.append(_mid_line_branch_task(
        "t14_two_errors", "# print the sum twice\n", read_two,
        "print(", "a // b", "a + b", 0.52, ")\n",
        [("8 0", "8\n8\n")], [("8 0", "8\n8\n"), ("5 0", "5\n5\n")],
        rollbacks=2,
        extra=[("print(", "cc", "a", 0.52, ")\n")]))
    tasks.append(_mid_line_branch_task(
        "t15_two_errors", "# print difference then second\n", read_two,
        "print(", "a // b", "a - b", 0.52, ")\n",
        [("9 0", "9\n0\n")], [("9 0", "9\n0\n"), ("4 0", "4\n0\n")],
        rollbacks=2,
        extra=[("print(", "zz", "b", 0.52, ")\n")]))

    # Three injected errors: two located runtime failures plus a wrong final
    # output. The last branch is slightly more balanced (0.51) so its entropy
    # peaks above the earlier branches and the no-location rollback lands on
    # the right line.
    tasks.append(_mid_line_branch_task(
        "t16_three_errors", "# sum, second, doubled\n", read_two,
        "print(", "a // b", "a + b", 0.52, ")\n",
        [("8 0", "8\n0\n16\n")],
        [("8 0", "8\n0\n16\n"), ("3 0", "3\n0\n6\n")],
        rollbacks=3,
        extra=[("print(", "qq", "b", 0.52, ")\n"),
               ("print(", "a - b", "a * 2", 0.51, ")\n")]))

    tasks.append(_mid_line_branch_task(
        "t17_str_index", "# print the first character\n", "s = input()\n",
        "print(", "s[25]", "s[0]", 0.52, ")\n",
        [("hello", "h\n")], [("hello", "h\n"), ("world", "w\n")], rollbacks=1))
    tasks.append(_mid_line_branch_task(
        "t18_off_by_one", "# print the successor\n", "x = int(input())\n",
        "print(", "x - 1", "x + 1", 0.52, ")\n",
        [("10", "11\n")], [("10", "11\n"), ("0", "1\n")], rollbacks=1))
    tasks.append(_mid_line_branch_task(
        "t19_two_errors", "# product then second\n",
        "p, q = map(int, input().split())\n",
        "print(", "p // q", "p * q", 0.52, ")\n",
        [("7 0", "0\n0\n")], [("7 0", "0\n0\n"), ("9 0", "0\n0\n")],
        rollbacks=2,
        extra=[("print(", "rr", "q", 0.52, ")\n")]))
    tasks.append(_repetition_task(
        "t20_repeat", "# add three\n", "t = int(input())\n",
        "t * 1\n", "print(t + 3)\n",
        [("4", "7\n")], [("4", "7\n"), ("9", "12\n")]))

    assert len(tasks) == 20
    return tasks


def ablation_task() -> SuiteTask:
    """Deterministic wide-margin runtime error for the constraint ablation:
    with penalties the engine needs two rollbacks and finishes; without them
    greedy regenerates the same statement until the budget runs out."""
    suite_task = _mid_line_branch_task(
        "ablation_div", "# print the sum of two integers\n",
        "a, b = map(int, input().split())\n",
        "print(", "a // b", "a + b", 0.55, ")\n",
        [("6 0", "6\n")], [("6 0", "6\n")], rollbacks=2)
    return SuiteTask(suite_task.task, suite_task.model_json,
                     suite_task.expected_rollbacks, max_generation_length=24)


def clean_tasks() -> List[SuiteTask]:
    """Error-free scripted programs, including compound-statement headers,
    used by the engine unit tests for the no-rollback path."""
    tasks: List[SuiteTask] = []

    s = _Script()
    ctx = s.seq("", "a = int(input())\n", "print(", "a + 1", ")\n")
    s.eos(ctx)
    tasks.append(SuiteTask(
        TaskSpec("c01_linear", "# print the successor\n",
                 _cases(("4", "5\n")), _cases(("4", "5\n"), ("9", "10\n"))),
        s.model().to_json(), 0))

    s = _Script()
    ctx = s.seq("", "n = int(input())\n", "if n > 2:\n", "    print('big')\n",
                "else:\n", "    print('small')\n")
    s.eos(ctx)
    tasks.append(SuiteTask(
        TaskSpec("c02_branchy", "# classify the number\n",
                 _cases(("5", "big\n")), _cases(("5", "big\n"), ("1", "small\n"))),
        s.model().to_json(), 0))

    s = _Script()
    ctx = s.seq("", "def double(n):\n", "    return n * 2\n",
                "print(double(int(input())))\n")
    s.eos(ctx)
    tasks.append(SuiteTask(
        TaskSpec("c03_function", "# double the input\n",
                 _cases(("6", "12\n")), _cases(("6", "12\n"), ("0", "0\n"))),
        s.model().to_json(), 0))

    s = _Script()
    ctx = s.seq("", "x = int(input())\n", "y = x * x\n", "print(y)\n")
    s.eos(ctx)
    tasks.append(SuiteTask(
        TaskSpec("c04_square", "# square the input\n",
                 _cases(("3", "9\n")), _cases(("3", "9\n"), ("5", "25\n"))),
        s.model().to_json(), 0))

    return tasks


def suite_documents() -> Tuple[List[dict], dict]:
    """(task JSON lines, scripted-provider document) for the CLI demo."""
    suite = build_suite()
    tasks = [st.task.to_json() for st in suite]
    models = {"tasks": {st.task.task_id: st.model_json for st in suite}}
    return tasks, models

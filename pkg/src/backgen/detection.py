"""Incremental error detection over a growing partial program.

Three pieces live here: the statement segmenter that decides where checkable
units end in the token stream, the detector that dispatches partial code to
the analyzer worker and classifies the outcome, and the repeat-pattern check
over the statement-kind walk of the syntax tree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .sandbox import SandboxClient

ERROR_TYPES = frozenset({
    "syntax", "type_mismatch", "declaration", "scope", "linking", "timeout",
    "recursion", "division_by_zero", "memory_access", "index_out_of_bounds",
    "resource_not_found", "assertion_failed", "repetition", "other",
})

SUCCESS = "success"
FAILURE = "failure"


@dataclass(frozen=True)
class ErrorReport:
    """Outcome of one check. On success the locating fields are absent."""

    result: str
    error_type: Optional[str] = None
    lineno: Optional[int] = None
    offset: Optional[int] = None
    message: str = ""

    def __post_init__(self):
        if self.result == SUCCESS:
            if self.error_type is not None or self.lineno is not None \
                    or self.offset is not None:
                raise ValueError("success reports carry no error fields")
        elif self.result == FAILURE:
            if self.error_type not in ERROR_TYPES:
                raise ValueError(f"unknown error type {self.error_type!r}")
        else:
            raise ValueError(f"result must be success or failure, got {self.result!r}")

    @classmethod
    def ok(cls) -> "ErrorReport":
        return cls(SUCCESS)

    @property
    def failed(self) -> bool:
        return self.result == FAILURE


class CheckPhase(enum.Enum):
    STATIC_ONLY = "static_only"
    RUN_WITH_INPUT = "run_with_input"
    FULL_TESTS = "full_tests"


# ---------------------------------------------------------------------------
# Statement segmentation
# ---------------------------------------------------------------------------

_OPENERS = "([{"
_CLOSERS = ")]}"


def _open_at_end(text: str) -> bool:
    """True when ``text`` (ending at a newline) is lexically mid-construct:
    inside an unclosed bracket, a triple-quoted string, a string continued by
    an escaped newline, or after a backslash line continuation."""
    depth = 0
    i = 0
    n = len(text)
    string_quote = ""      # quote char while inside a string literal
    string_triple = False
    pending_continuation = False
    while i < n:
        ch = text[i]
        if string_quote:
            if ch == "\\":
                i += 2
                continue
            if string_triple:
                if text.startswith(string_quote * 3, i):
                    string_quote = ""
                    string_triple = False
                    i += 3
                    continue
            elif ch == string_quote or ch == "\n":
                # A raw newline terminates (breaks) a single-quoted literal.
                string_quote = ""
            i += 1
            continue
        if ch == "#":
            nl = text.find("\n", i)
            i = n if nl < 0 else nl
            continue
        if ch in "\"'":
            if text.startswith(ch * 3, i):
                string_quote = ch
                string_triple = True
                i += 3
            else:
                string_quote = ch
                i += 1
            continue
        if ch == "\\" and i + 1 < n and text[i + 1] == "\n":
            pending_continuation = True
            i += 2
            continue
        if ch == "\n":
            pending_continuation = False
        elif ch in _OPENERS:
            depth += 1
        elif ch in _CLOSERS:
            depth -= 1
        i += 1
    return depth > 0 or bool(string_quote) or pending_continuation


class StatementSegmenter:
    """Streams token texts and fires a boundary at each newline that leaves
    the program lexically closed. Unclosed brackets, backslash continuations,
    and open multi-line strings suppress the boundary; whether the completed
    unit is *valid* is the detector's business, not the segmenter's.
    """

    def __init__(self):
        self._text = ""

    def feed(self, token_text: str) -> bool:
        self._text += token_text
        if "\n" not in token_text:
            return False
        upto = self._text.rfind("\n") + 1
        return not _open_at_end(self._text[:upto])

    def reset_to(self, text: str):
        """Re-prime after a rollback truncated the decoded text."""
        self._text = text


def segment_statements(token_texts: Sequence[str]) -> List[int]:
    """Indices of tokens after which a statement boundary fires (test helper)."""
    seg = StatementSegmenter()
    return [i for i, text in enumerate(token_texts) if seg.feed(text)]


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestCase:
    """One benchmark test: stdin text or call arguments, plus the expected
    stdout when the case is usable for output comparison."""

    __test__ = False  # not a pytest class

    input: str
    expected_output: Optional[str] = None


def build_run_program(code: str, entry_point: Optional[str],
                      case: TestCase) -> Tuple[str, str]:
    """(program_text, stdin_text) for executing ``code`` against ``case``.

    With an entry point the case input is a Python argument expression and a
    driver call is appended; otherwise the program reads the input on stdin.
    """
    if entry_point:
        body = code if code.endswith("\n") or not code else code + "\n"
        return body + f"print({entry_point}({case.input}))\n", ""
    return code, case.input


def _count_lines(code: str) -> int:
    if not code:
        return 0
    return code.count("\n") + (0 if code.endswith("\n") else 1)


class Detector:
    """Runs analyzer checks for one generation session."""

    def __init__(self, client: SandboxClient, entry_point: Optional[str] = None,
                 strict_output: bool = False, memory_limit_mb: int = 256):
        self.client = client
        self.entry_point = entry_point
        self.strict_output = strict_output
        self.memory_limit_mb = memory_limit_mb

    # -- static ---------------------------------------------------------

    def compiles(self, code: str) -> bool:
        """True only for genuinely complete, compilable code (no downgrade)."""
        return self.client.request("compile", code)["result"] == SUCCESS

    def _report_from(self, resp: dict, code: str) -> ErrorReport:
        if resp["result"] == SUCCESS:
            return ErrorReport.ok()
        lineno = resp.get("lineno")
        # Diagnostics pointing past the generated text (e.g. into an appended
        # driver call) carry no usable location.
        if lineno is not None and lineno > _count_lines(code):
            lineno = None
        offset = resp.get("offset") if lineno is not None else None
        return ErrorReport(FAILURE, resp.get("error_type", "other"),
                           lineno, offset, resp.get("message", ""))

    def detect(self, partial_code: str, phase: CheckPhase,
               tests: Sequence[TestCase] = (), timeout_ms: int = 2000,
               allow_incomplete: bool = True) -> ErrorReport:
        """Check the accepted statements plus the newest one.

        In the static phase a syntax failure that is only unfinished input is
        downgraded to success while ``allow_incomplete`` holds (the program is
        still being generated); once generation has ended the same diagnostic
        is a real failure.
        """
        if phase == CheckPhase.STATIC_ONLY:
            resp = self.client.request("compile", partial_code)
            if resp["result"] == FAILURE and allow_incomplete and resp.get("eof"):
                return ErrorReport.ok()
            return self._report_from(resp, partial_code)

        if phase == CheckPhase.RUN_WITH_INPUT:
            for case in tests:
                program, stdin = build_run_program(partial_code,
                                                   self.entry_point, case)
                resp = self.client.request(
                    "run", program, test_input=stdin, timeout_ms=timeout_ms,
                    memory_limit_mb=self.memory_limit_mb)
                if resp["result"] == FAILURE:
                    return self._report_from(resp, partial_code)
            return ErrorReport.ok()

        if phase == CheckPhase.FULL_TESTS:
            usable = [c for c in tests if c.expected_output is not None]
            for case in usable:
                program, stdin = build_run_program(partial_code,
                                                   self.entry_point, case)
                resp = self.client.request(
                    "run_tests", program, test_input=stdin,
                    expected_output=case.expected_output,
                    timeout_ms=timeout_ms, strict=self.strict_output,
                    memory_limit_mb=self.memory_limit_mb)
                if resp["result"] == FAILURE:
                    return self._report_from(resp, partial_code)
            return ErrorReport.ok()

        raise ValueError(f"unknown check phase {phase!r}")

    # -- repetition -------------------------------------------------------

    def detect_repetition(self, partial_code: str,
                          threshold: int = 5) -> ErrorReport:
        """Fail when more than ``threshold`` statements of one kind run
        consecutively in a single statement list, or an if/elif chain grows
        past the same threshold. The report points at the first statement of
        the offending run."""
        if threshold < 1:
            raise ValueError("repetition threshold must be positive")
        resp = self.client.request("parse_tree", partial_code)
        if resp["result"] != SUCCESS:
            return ErrorReport.ok()  # nothing parseable yet to analyze
        run_kind, run_block, run_len, run_line = None, None, 0, None
        for entry in resp.get("stmt_kinds", []):
            same = (entry["kind"] == run_kind and entry["block"] == run_block)
            if same:
                run_len += 1
            else:
                run_kind, run_block = entry["kind"], entry["block"]
                run_len, run_line = 1, entry["lineno"]
            if run_len > threshold:
                return ErrorReport(
                    FAILURE, "repetition", run_line, None,
                    f"{run_kind} repeated {run_len} times consecutively")
        for chain in resp.get("if_chains", []):
            if chain["length"] > threshold:
                return ErrorReport(
                    FAILURE, "repetition", chain["lineno"], None,
                    f"branch chain of length {chain['length']}")
        return ErrorReport.ok()

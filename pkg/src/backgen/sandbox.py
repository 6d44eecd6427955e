"""Analyzer worker and its line-delimited JSON client.

Protocol: one UTF-8 JSON object per line on stdin, one response object per
line on stdout, strictly in order, no pretty-printing.

Request fields:
    mode            compile | parse_tree | run | run_tests
    code            candidate source text
    test_input      stdin for the candidate (run / run_tests)
    expected_output required for run_tests
    timeout_ms      wall clock budget for execution modes (default 2000)
    memory_limit_mb address-space cap for the grandchild (default 256)
    strict          run_tests: exact output compare instead of per-line rstrip

Response fields mirror the error-report shape: ``result`` plus, on failure,
``error_type`` / ``lineno`` / ``offset`` (0-based column) / ``message``. A
compile failure that is merely unfinished input carries ``eof: true``.
``parse_tree`` responses add ``stmt_kinds`` (the statement walk: kind name,
lineno, and the id of the enclosing statement list) and ``if_chains``
(elif-chain heads with their lengths). Execution modes add ``stdout`` /
``stderr`` captures truncated to 64 KiB. A malformed request gets a single
``{"protocol_error": ...}`` object and the stream continues.

Candidate execution happens in a grandchild interpreter with rlimits so a
crashing, looping, or memory-hungry candidate never takes the worker down.
"""

from __future__ import annotations

import ast
import codeop
import itertools
import json
import os
import shlex
import subprocess
import sys
import tempfile
import warnings
from typing import List, Optional

from .errors import AnalyzerError

MODES = ("compile", "parse_tree", "run", "run_tests")
CAPTURE_LIMIT = 64 * 1024
DEFAULT_TIMEOUT_MS = 2000
DEFAULT_MEMORY_MB = 256

SANDBOX_ENV_VAR = "BACKGEN_SANDBOX"

# Interpreter exception name -> report taxonomy.
EXCEPTION_TAXONOMY = {
    "SyntaxError": "syntax",
    "IndentationError": "syntax",
    "TabError": "syntax",
    "TypeError": "type_mismatch",
    "NameError": "declaration",
    "UnboundLocalError": "scope",
    "RecursionError": "recursion",
    "ZeroDivisionError": "division_by_zero",
    "MemoryError": "memory_access",
    "BufferError": "memory_access",
    "IndexError": "index_out_of_bounds",
    "KeyError": "index_out_of_bounds",
    "FileNotFoundError": "resource_not_found",
    "ModuleNotFoundError": "resource_not_found",
    "ImportError": "resource_not_found",
    "AssertionError": "assertion_failed",
}


def _classify(exc_name: str) -> str:
    return EXCEPTION_TAXONOMY.get(exc_name, "other")


def _is_incomplete(code: str) -> bool:
    """True when the only thing wrong with ``code`` is that it stops early."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return codeop.compile_command(code, "<candidate>", "exec") is None
        except (SyntaxError, ValueError, OverflowError):
            return False


def _offset0(offset: Optional[int]) -> int:
    # CPython reports 1-based columns (occasionally 0 or None).
    if not offset or offset < 1:
        return 0
    return offset - 1


def _truncate(text: str) -> str:
    return text[:CAPTURE_LIMIT]


def handle_compile(req: dict) -> dict:
    code = req.get("code", "")
    try:
        compile(code, "<candidate>", "exec")
        return {"result": "success"}
    except SyntaxError as exc:
        return {"result": "failure", "error_type": "syntax",
                "lineno": exc.lineno, "offset": _offset0(exc.offset),
                "message": exc.msg or "", "eof": _is_incomplete(code)}
    except (ValueError, TypeError) as exc:
        return {"result": "failure", "error_type": "syntax", "lineno": None,
                "offset": None, "message": str(exc), "eof": False}


def _statement_walk(module: ast.Module):
    """Flat pre-order walk of every statement list. Entries carry the kind
    name, the line, and an id for the enclosing list so consecutive runs at
    one nesting level are reconstructible. elif arms are also summarized as
    chains keyed by the head ``if``."""
    kinds: List[dict] = []
    chains: List[dict] = []
    block_ids = itertools.count()
    elif_targets = set()

    def chain_length(node: ast.If) -> int:
        length = 1
        while (len(node.orelse) == 1 and isinstance(node.orelse[0], ast.If)
               and node.orelse[0].col_offset == node.col_offset):
            node = node.orelse[0]
            elif_targets.add(id(node))
            length += 1
        return length

    def walk(body: List[ast.stmt]):
        bid = next(block_ids)
        for stmt in body:
            kinds.append({"kind": type(stmt).__name__,
                          "lineno": stmt.lineno, "block": bid})
            if isinstance(stmt, ast.If) and id(stmt) not in elif_targets:
                length = chain_length(stmt)
                if length > 1:
                    chains.append({"lineno": stmt.lineno, "length": length})
            for name in ("body", "orelse", "finalbody"):
                sub = getattr(stmt, name, None)
                if sub and isinstance(sub[0], ast.stmt):
                    walk(sub)
            for handler in getattr(stmt, "handlers", []):
                walk(handler.body)

    walk(module.body)
    return kinds, chains


def handle_parse_tree(req: dict) -> dict:
    code = req.get("code", "")
    lines = code.split("\n")
    tree = None
    trimmed = 0
    # Trailing incompleteness is dropped line by line until the prefix parses.
    for trim in range(len(lines) + 1):
        text = "\n".join(lines[:len(lines) - trim])
        try:
            tree = ast.parse(text)
            trimmed = trim
            break
        except SyntaxError:
            continue
        except (ValueError, TypeError):
            break
    if tree is None:
        return {"result": "failure", "error_type": "syntax", "lineno": None,
                "offset": None, "message": "no parseable prefix", "eof": False}
    kinds, chains = _statement_walk(tree)
    return {"result": "success", "stmt_kinds": kinds, "if_chains": chains,
            "trimmed_lines": trimmed}


def _runner_path() -> str:
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "_runner.py")


def _execute(code: str, test_input: str, timeout_ms: int,
             memory_mb: int) -> dict:
    """Run the candidate in a limited grandchild; normalize the outcome."""
    fd, path = tempfile.mkstemp(suffix=".py", prefix="candidate_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(code)
        try:
            proc = subprocess.run(
                [sys.executable, "-I", _runner_path(), path, str(memory_mb)],
                input=test_input, capture_output=True, text=True,
                timeout=max(0.05, timeout_ms / 1000.0))
        except subprocess.TimeoutExpired as exc:
            return {"result": "failure", "error_type": "timeout",
                    "lineno": None, "offset": None,
                    "message": f"execution exceeded {timeout_ms} ms",
                    "stdout": _truncate(exc.stdout or ""),
                    "stderr": _truncate(exc.stderr or "")}
    finally:
        try:
            os.unlink(path)
        except OSError:
            pass

    stdout, stderr = proc.stdout, proc.stderr
    if proc.returncode == 0:
        return {"result": "success", "stdout": _truncate(stdout),
                "stderr": _truncate(stderr)}

    if proc.returncode == 3 and stderr.strip():
        sentinel_line = stderr.strip().splitlines()[-1]
        try:
            sentinel = json.loads(sentinel_line)
        except json.JSONDecodeError:
            sentinel = None
        if sentinel is not None:
            user_stderr = stderr[:stderr.rfind(sentinel_line)].rstrip("\n")
            report = {"result": "failure",
                      "error_type": _classify(sentinel.get("exc", "")),
                      "lineno": sentinel.get("lineno"),
                      "offset": None,
                      "message": f"{sentinel.get('exc')}: {sentinel.get('msg', '')}",
                      "stdout": _truncate(stdout),
                      "stderr": _truncate(user_stderr)}
            if report["error_type"] == "syntax":
                report["offset"] = _offset0(sentinel.get("offset"))
                report["eof"] = _is_incomplete(code)
            return report

    # Hard kill without a sentinel: signal-level death (OOM, segfault, ...).
    error_type = "memory_access" if proc.returncode < 0 else "other"
    return {"result": "failure", "error_type": error_type, "lineno": None,
            "offset": None,
            "message": f"candidate died with return code {proc.returncode}",
            "stdout": _truncate(stdout), "stderr": _truncate(stderr)}


def _match_output(actual: str, expected: str, strict: bool) -> bool:
    if strict:
        return actual == expected

    def norm(text: str) -> List[str]:
        lines = [line.rstrip() for line in text.split("\n")]
        while lines and lines[-1] == "":
            lines.pop()
        return lines

    return norm(actual) == norm(expected)


def handle_run(req: dict) -> dict:
    return _execute(req.get("code", ""), req.get("test_input", ""),
                    int(req.get("timeout_ms", DEFAULT_TIMEOUT_MS)),
                    int(req.get("memory_limit_mb", DEFAULT_MEMORY_MB)))


def handle_run_tests(req: dict) -> dict:
    if "expected_output" not in req or req["expected_output"] is None:
        raise KeyError("run_tests requires expected_output")
    result = handle_run(req)
    if result["result"] != "success":
        return result
    if _match_output(result.get("stdout", ""), req["expected_output"],
                     bool(req.get("strict", False))):
        return result
    return {"result": "failure", "error_type": "assertion_failed",
            "lineno": None, "offset": None,
            "message": "output does not match the expected output",
            "stdout": result.get("stdout", ""),
            "stderr": result.get("stderr", "")}


_HANDLERS = {
    "compile": handle_compile,
    "parse_tree": handle_parse_tree,
    "run": handle_run,
    "run_tests": handle_run_tests,
}


def handle_request(req: dict) -> dict:
    mode = req.get("mode")
    if mode not in MODES:
        return {"protocol_error": True, "message": f"unknown mode {mode!r}"}
    if not isinstance(req.get("code", ""), str):
        return {"protocol_error": True, "message": "code must be a string"}
    try:
        return _HANDLERS[mode](req)
    except Exception as exc:  # the worker must survive anything
        return {"protocol_error": True,
                "message": f"{type(exc).__name__}: {exc}"}


def serve(stdin=None, stdout=None):
    """Read one request per line, answer one response per line, in order."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError("request must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            resp = {"protocol_error": True, "message": f"bad request: {exc}"}
        else:
            resp = handle_request(req)
        stdout.write(json.dumps(resp, ensure_ascii=False) + "\n")
        stdout.flush()


class SandboxClient:
    """Owns one worker process and speaks the wire protocol to it.

    Not thread-safe: each generation session runs its own client. The worker
    command comes from the BACKGEN_SANDBOX environment variable when set
    (e.g. pointing at an alternative protocol-compatible worker binary),
    otherwise this package's own worker is spawned.
    """

    def __init__(self, command: Optional[List[str]] = None):
        if command is None:
            env_cmd = os.environ.get(SANDBOX_ENV_VAR, "").strip()
            command = (shlex.split(env_cmd) if env_cmd
                       else [sys.executable, "-u", "-m", "backgen.sandbox"])
        self.command = command
        try:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, encoding="utf-8",
                env={**os.environ, "PYTHONUNBUFFERED": "1"})
        except OSError as exc:
            raise AnalyzerError(f"cannot start analyzer worker {command}: {exc}")

    def request(self, mode: str, code: str, **fields) -> dict:
        req = {"mode": mode, "code": code, **fields}
        if self._proc.poll() is not None:
            raise AnalyzerError("analyzer worker has exited")
        try:
            self._proc.stdin.write(json.dumps(req, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise AnalyzerError(f"analyzer worker pipe failed: {exc}")
        if not line:
            raise AnalyzerError("analyzer worker closed its stream")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AnalyzerError(f"unparseable analyzer response: {exc}")
        if resp.get("protocol_error"):
            raise AnalyzerError(f"analyzer protocol error: {resp.get('message')}")
        return resp

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=3)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


if __name__ == "__main__":
    serve()

"""Standalone grandchild that executes one candidate program.

Invoked as ``python -I _runner.py <codefile> [memory_limit_mb]`` with the test
input on stdin. Self-limits via rlimits, runs the candidate under the filename
``<candidate>``, and reports any exception as a single JSON line on stderr
(always the last stderr line) with the deepest candidate-frame line number.

Exit codes: 0 clean run, 3 exception reported, anything else is a hard kill
(classified by the parent).

Kept import-free of the rest of the package so any worker implementation can
ship and spawn it verbatim.
"""

import json
import sys

CANDIDATE = "<candidate>"


def _limit(memory_mb):
    try:
        import resource
    except ImportError:  # non-POSIX; parent timeout still applies
        return
    if memory_mb:
        limit = memory_mb * 1024 * 1024
        try:
            resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
        except (ValueError, OSError):
            pass
    try:
        resource.setrlimit(resource.RLIMIT_NPROC, (64, 64))
    except (ValueError, OSError):
        pass


def _deepest_candidate_lineno(exc):
    tb = exc.__traceback__
    lineno = None
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == CANDIDATE:
            lineno = tb.tb_lineno
        tb = tb.tb_next
    return lineno


def _report(exc, lineno, offset=None):
    payload = {"exc": type(exc).__name__, "lineno": lineno,
               "msg": str(exc)[:500]}
    if offset is not None:
        payload["offset"] = offset
    sys.stderr.write("\n" + json.dumps(payload) + "\n")
    sys.stderr.flush()
    sys.exit(3)


def main():
    path = sys.argv[1]
    memory_mb = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    _limit(memory_mb)
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    try:
        code = compile(source, CANDIDATE, "exec")
    except SyntaxError as exc:
        _report(exc, exc.lineno, exc.offset)
    except (ValueError, TypeError) as exc:
        _report(exc, None)
    scope = {"__name__": "__main__", "__builtins__": __builtins__}
    try:
        exec(code, scope)
    except SystemExit:
        pass
    except BaseException as exc:
        _report(exc, _deepest_candidate_lineno(exc))


if __name__ == "__main__":
    main()

/**
 * Python interpreter plumbing.
 *
 * All Python-language semantics (compile diagnostics, incomplete-input
 * classification, syntax-tree walks, candidate execution) are delegated to
 * the reference interpreter via embedded helper scripts:
 *
 * - a persistent "static" child handles compile/parse_tree requests over
 *   line-delimited JSON (fast path, no process per request);
 * - each run/run_tests request gets a fresh grandchild that applies its own
 *   rlimits, executes the candidate, and reports any exception as a JSON
 *   sentinel on the last stderr line. The worker enforces the wall-clock
 *   timeout from outside with SIGKILL.
 */

import { spawn, ChildProcess } from "child_process";
import { mkdtempSync, rmSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import * as path from "path";
import * as readline from "readline";

export const PYTHON_BIN = process.env.SANDBOX_WORKER_PYTHON || "python3";

/** compile / parse_tree helper: one JSON request per stdin line. */
const STATIC_HELPER = String.raw`
import ast, codeop, itertools, json, sys, warnings

def compile_check(code):
    try:
        compile(code, "<candidate>", "exec")
        return {"ok": True}
    except SyntaxError as e:
        eof = False
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                eof = codeop.compile_command(code, "<candidate>", "exec") is None
            except Exception:
                eof = False
        return {"ok": False, "lineno": e.lineno, "offset": e.offset,
                "msg": e.msg or "", "eof": eof}
    except (ValueError, TypeError) as e:
        return {"ok": False, "lineno": None, "offset": None,
                "msg": str(e), "eof": False}

def statement_walk(module):
    kinds, chains = [], []
    block_ids = itertools.count()
    elif_targets = set()

    def chain_length(node):
        length = 1
        while (len(node.orelse) == 1 and isinstance(node.orelse[0], ast.If)
               and node.orelse[0].col_offset == node.col_offset):
            node = node.orelse[0]
            elif_targets.add(id(node))
            length += 1
        return length

    def walk(body):
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

def parse_tree(code):
    lines = code.split("\n")
    for trim in range(len(lines) + 1):
        text = "\n".join(lines[: len(lines) - trim])
        try:
            tree = ast.parse(text)
        except SyntaxError:
            continue
        except (ValueError, TypeError):
            break
        kinds, chains = statement_walk(tree)
        return {"ok": True, "stmt_kinds": kinds, "if_chains": chains,
                "trimmed_lines": trim}
    return {"ok": False, "msg": "no parseable prefix"}

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    try:
        req = json.loads(line)
        if req["op"] == "compile":
            resp = compile_check(req["code"])
        else:
            resp = parse_tree(req["code"])
    except Exception as e:
        resp = {"ok": False, "helper_error": True, "msg": str(e)}
    sys.stdout.write(json.dumps(resp) + "\n")
    sys.stdout.flush()
`;

/** Candidate runner: self-limits, executes, reports a stderr JSON sentinel. */
const RUNNER = String.raw`
import json, sys

CANDIDATE = "<candidate>"

def _limit(memory_mb):
    try:
        import resource
    except ImportError:
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

def _deepest(exc):
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

path = sys.argv[1]
_limit(int(sys.argv[2]) if len(sys.argv) > 2 else 0)
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
    _report(exc, _deepest(exc))
`;

export interface CompileCheck {
  ok: boolean;
  lineno?: number | null;
  offset?: number | null;
  msg?: string;
  eof?: boolean;
  stmt_kinds?: Array<{ kind: string; lineno: number; block: number }>;
  if_chains?: Array<{ lineno: number; length: number }>;
  trimmed_lines?: number;
  helper_error?: boolean;
}

/**
 * Persistent compile/parse helper. Requests are serialized by the caller
 * (the worker answers one request at a time); if the child somehow dies it
 * is respawned on the next request.
 */
export class StaticAnalyzer {
  private child: ChildProcess | null = null;
  private reader: readline.Interface | null = null;
  private pending: Array<(line: string) => void> = [];

  private ensure(): ChildProcess {
    if (this.child && this.child.exitCode === null && !this.child.killed) {
      return this.child;
    }
    this.child = spawn(PYTHON_BIN, ["-I", "-u", "-c", STATIC_HELPER], {
      stdio: ["pipe", "pipe", "ignore"],
    });
    this.reader = readline.createInterface({ input: this.child.stdout! });
    this.reader.on("line", (line) => {
      const resolve = this.pending.shift();
      if (resolve) {
        resolve(line);
      }
    });
    this.child.on("exit", () => {
      // Fail any in-flight request; the next one respawns the helper.
      while (this.pending.length > 0) {
        this.pending.shift()!("");
      }
    });
    return this.child;
  }

  async request(op: "compile" | "parse", code: string): Promise<CompileCheck> {
    const child = this.ensure();
    const line = await new Promise<string>((resolve) => {
      this.pending.push(resolve);
      child.stdin!.write(JSON.stringify({ op, code }) + "\n");
    });
    if (!line) {
      return { ok: false, helper_error: true, msg: "analyzer helper exited" };
    }
    try {
      return JSON.parse(line) as CompileCheck;
    } catch {
      return { ok: false, helper_error: true, msg: "unparseable helper reply" };
    }
  }

  close(): void {
    this.reader?.close();
    this.child?.kill("SIGKILL");
    this.child = null;
  }
}

export interface ExecutionOutcome {
  timedOut: boolean;
  exitCode: number | null;
  signal: NodeJS.Signals | null;
  stdout: string;
  stderr: string;
}

/** Run the candidate in a fresh self-limited grandchild. */
export function executeCandidate(
  code: string,
  testInput: string,
  timeoutMs: number,
  memoryMb: number,
): Promise<ExecutionOutcome> {
  const dir = mkdtempSync(path.join(tmpdir(), "candidate-"));
  const file = path.join(dir, "candidate.py");
  writeFileSync(file, code, "utf-8");

  return new Promise<ExecutionOutcome>((resolve) => {
    const child = spawn(PYTHON_BIN, ["-I", "-c", RUNNER, file, String(memoryMb)], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    let timedOut = false;
    const timer = setTimeout(() => {
      timedOut = true;
      child.kill("SIGKILL");
    }, Math.max(50, timeoutMs));

    child.stdout!.on("data", (chunk) => {
      stdout += chunk.toString();
    });
    child.stderr!.on("data", (chunk) => {
      stderr += chunk.toString();
    });
    child.on("error", () => {
      clearTimeout(timer);
      rmSync(dir, { recursive: true, force: true });
      resolve({ timedOut: false, exitCode: null, signal: null, stdout, stderr });
    });
    child.on("close", (exitCode, signal) => {
      clearTimeout(timer);
      rmSync(dir, { recursive: true, force: true });
      resolve({ timedOut, exitCode, signal, stdout, stderr });
    });

    child.stdin!.on("error", () => {
      /* candidate exited before reading its input */
    });
    child.stdin!.write(testInput);
    child.stdin!.end();
  });
}

/**
 * Mode handlers: turn one analyzer request into one response object,
 * normalizing interpreter diagnostics into the report taxonomy (0-based
 * columns, exception classes mapped to error types, timeout and hard-kill
 * classification).
 */

import {
  AnalyzeRequest,
  AnalyzeResponse,
  DEFAULT_MEMORY_MB,
  DEFAULT_TIMEOUT_MS,
  classifyException,
  outputsMatch,
  truncate,
} from "./protocol";
import { ExecutionOutcome, StaticAnalyzer, executeCandidate } from "./python";

/** CPython columns are 1-based (occasionally 0 or missing). */
function offset0(offset: number | null | undefined): number {
  if (!offset || offset < 1) {
    return 0;
  }
  return offset - 1;
}

interface Sentinel {
  exc: string;
  lineno: number | null;
  msg: string;
  offset?: number | null;
}

function parseSentinel(stderr: string): Sentinel | null {
  const lines = stderr.trim().split("\n");
  const last = lines[lines.length - 1];
  if (!last) {
    return null;
  }
  try {
    const parsed = JSON.parse(last);
    return typeof parsed === "object" && parsed !== null && "exc" in parsed
      ? (parsed as Sentinel)
      : null;
  } catch {
    return null;
  }
}

function stripSentinel(stderr: string, sentinel: Sentinel | null): string {
  if (sentinel === null) {
    return stderr;
  }
  // The sentinel is always the last stderr line; drop it and the padding.
  const body = stderr.replace(/\n+$/, "");
  const cut = body.lastIndexOf("\n");
  return cut >= 0 ? body.slice(0, cut).replace(/\n+$/, "") : "";
}

export class Handlers {
  constructor(private analyzer: StaticAnalyzer) {}

  async compile(req: AnalyzeRequest): Promise<AnalyzeResponse> {
    const check = await this.analyzer.request("compile", req.code);
    if (check.helper_error) {
      throw new Error(check.msg || "analyzer helper failed");
    }
    if (check.ok) {
      return { result: "success" };
    }
    return {
      result: "failure",
      error_type: "syntax",
      lineno: check.lineno ?? null,
      offset: check.lineno != null ? offset0(check.offset) : null,
      message: check.msg ?? "",
      eof: Boolean(check.eof),
    };
  }

  async parseTree(req: AnalyzeRequest): Promise<AnalyzeResponse> {
    const check = await this.analyzer.request("parse", req.code);
    if (check.helper_error) {
      throw new Error(check.msg || "analyzer helper failed");
    }
    if (!check.ok) {
      return {
        result: "failure",
        error_type: "syntax",
        lineno: null,
        offset: null,
        message: check.msg ?? "",
        eof: false,
      };
    }
    return {
      result: "success",
      stmt_kinds: check.stmt_kinds ?? [],
      if_chains: check.if_chains ?? [],
      trimmed_lines: check.trimmed_lines ?? 0,
    };
  }

  async run(req: AnalyzeRequest): Promise<AnalyzeResponse> {
    const timeoutMs = req.timeout_ms ?? DEFAULT_TIMEOUT_MS;
    const memoryMb = req.memory_limit_mb ?? DEFAULT_MEMORY_MB;
    const outcome = await executeCandidate(
      req.code,
      req.test_input ?? "",
      timeoutMs,
      memoryMb,
    );
    return this.normalizeOutcome(req, outcome, timeoutMs);
  }

  async runTests(req: AnalyzeRequest): Promise<AnalyzeResponse> {
    if (req.expected_output == null) {
      throw new Error("run_tests requires expected_output");
    }
    const result = await this.run(req);
    if (result.result !== "success") {
      return result;
    }
    if (outputsMatch(result.stdout ?? "", req.expected_output, Boolean(req.strict))) {
      return result;
    }
    return {
      result: "failure",
      error_type: "assertion_failed",
      lineno: null,
      offset: null,
      message: "output does not match the expected output",
      stdout: result.stdout,
      stderr: result.stderr,
    };
  }

  private async normalizeOutcome(
    req: AnalyzeRequest,
    outcome: ExecutionOutcome,
    timeoutMs: number,
  ): Promise<AnalyzeResponse> {
    if (outcome.timedOut) {
      return {
        result: "failure",
        error_type: "timeout",
        lineno: null,
        offset: null,
        message: `execution exceeded ${timeoutMs} ms`,
        stdout: truncate(outcome.stdout),
        stderr: truncate(outcome.stderr),
      };
    }
    if (outcome.exitCode === 0) {
      return {
        result: "success",
        stdout: truncate(outcome.stdout),
        stderr: truncate(outcome.stderr),
      };
    }
    const sentinel = outcome.exitCode === 3 ? parseSentinel(outcome.stderr) : null;
    if (sentinel !== null) {
      const errorType = classifyException(sentinel.exc);
      const response: AnalyzeResponse = {
        result: "failure",
        error_type: errorType,
        lineno: sentinel.lineno,
        offset: null,
        message: `${sentinel.exc}: ${sentinel.msg}`,
        stdout: truncate(outcome.stdout),
        stderr: truncate(stripSentinel(outcome.stderr, sentinel)),
      };
      if (errorType === "syntax") {
        response.offset = offset0(sentinel.offset);
        const check = await this.analyzer.request("compile", req.code);
        response.eof = Boolean(check.eof);
      }
      return response;
    }
    // Hard kill without a sentinel: signal-level death (OOM, segfault, ...).
    return {
      result: "failure",
      error_type: outcome.signal !== null ? "memory_access" : "other",
      lineno: null,
      offset: null,
      message: `candidate died (exit ${outcome.exitCode ?? "?"}, signal ${outcome.signal ?? "none"})`,
      stdout: truncate(outcome.stdout),
      stderr: truncate(outcome.stderr),
    };
  }
}

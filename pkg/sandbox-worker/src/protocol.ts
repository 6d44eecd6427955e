/**
 * Wire protocol types for the analyzer worker.
 *
 * One JSON object per line on stdin, one per line on stdout, strictly in
 * request order. A request the worker cannot even interpret gets a
 * `{ protocol_error: true }` object and the stream continues.
 */

export type Mode = "compile" | "parse_tree" | "run" | "run_tests";

export const MODES: readonly Mode[] = ["compile", "parse_tree", "run", "run_tests"];

export interface AnalyzeRequest {
  mode: Mode;
  code: string;
  test_input?: string;
  expected_output?: string;
  timeout_ms?: number;
  memory_limit_mb?: number;
  strict?: boolean;
}

export interface StmtKind {
  kind: string;
  lineno: number;
  block: number;
}

export interface IfChain {
  lineno: number;
  length: number;
}

export interface AnalyzeResponse {
  result: "success" | "failure";
  error_type?: string | null;
  lineno?: number | null;
  offset?: number | null;
  message?: string;
  eof?: boolean;
  stmt_kinds?: StmtKind[];
  if_chains?: IfChain[];
  trimmed_lines?: number;
  stdout?: string;
  stderr?: string;
}

export interface ProtocolError {
  protocol_error: true;
  message: string;
}

export const DEFAULT_TIMEOUT_MS = 2000;
export const DEFAULT_MEMORY_MB = 256;
export const CAPTURE_LIMIT = 64 * 1024;

/** Interpreter exception name -> report taxonomy. */
const EXCEPTION_TAXONOMY: Record<string, string> = {
  SyntaxError: "syntax",
  IndentationError: "syntax",
  TabError: "syntax",
  TypeError: "type_mismatch",
  NameError: "declaration",
  UnboundLocalError: "scope",
  RecursionError: "recursion",
  ZeroDivisionError: "division_by_zero",
  MemoryError: "memory_access",
  BufferError: "memory_access",
  IndexError: "index_out_of_bounds",
  KeyError: "index_out_of_bounds",
  FileNotFoundError: "resource_not_found",
  ModuleNotFoundError: "resource_not_found",
  ImportError: "resource_not_found",
  AssertionError: "assertion_failed",
};

export function classifyException(excName: string): string {
  return EXCEPTION_TAXONOMY[excName] ?? "other";
}

export function truncate(text: string): string {
  return text.length > CAPTURE_LIMIT ? text.slice(0, CAPTURE_LIMIT) : text;
}

/**
 * Output comparison for run_tests: exact match in strict mode, otherwise
 * per-line trailing-whitespace strip with trailing blank lines dropped.
 */
export function outputsMatch(actual: string, expected: string, strict: boolean): boolean {
  if (strict) {
    return actual === expected;
  }
  const norm = (text: string): string[] => {
    const lines = text.split("\n").map((line) => line.replace(/[ \t\r]+$/, ""));
    while (lines.length > 0 && lines[lines.length - 1] === "") {
      lines.pop();
    }
    return lines;
  };
  const a = norm(actual);
  const b = norm(expected);
  return a.length === b.length && a.every((line, i) => line === b[i]);
}

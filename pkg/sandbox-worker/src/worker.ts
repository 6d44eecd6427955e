#!/usr/bin/env node
/**
 * Analyzer worker entry point.
 *
 * Reads one JSON request per stdin line and writes one response per stdout
 * line, strictly in order (requests are handled one at a time). Candidate
 * code runs in resource-limited grandchildren, so a crashing, looping, or
 * memory-hungry candidate never takes the worker down; a malformed request
 * produces a single protocol_error object and the stream continues.
 */

import * as readline from "readline";

import { Handlers } from "./handlers";
import {
  AnalyzeRequest,
  AnalyzeResponse,
  MODES,
  Mode,
  ProtocolError,
} from "./protocol";
import { StaticAnalyzer } from "./python";

function protocolError(message: string): ProtocolError {
  return { protocol_error: true, message };
}

function parseRequest(line: string): AnalyzeRequest | ProtocolError {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch (err) {
    return protocolError(`bad request: ${(err as Error).message}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    return protocolError("request must be a JSON object");
  }
  const req = parsed as Record<string, unknown>;
  if (!MODES.includes(req.mode as Mode)) {
    return protocolError(`unknown mode ${JSON.stringify(req.mode)}`);
  }
  if (typeof req.code !== "string") {
    return protocolError("code must be a string");
  }
  return req as unknown as AnalyzeRequest;
}

export async function serve(): Promise<void> {
  const analyzer = new StaticAnalyzer();
  const handlers = new Handlers(analyzer);
  const reader = readline.createInterface({ input: process.stdin });

  const write = (obj: AnalyzeResponse | ProtocolError) => {
    process.stdout.write(JSON.stringify(obj) + "\n");
  };

  // Serialize handling so response order always matches request order.
  let chain: Promise<void> = Promise.resolve();
  reader.on("line", (line) => {
    const trimmed = line.trim();
    if (!trimmed) {
      return;
    }
    chain = chain.then(async () => {
      const req = parseRequest(trimmed);
      if ("protocol_error" in req) {
        write(req);
        return;
      }
      try {
        switch (req.mode) {
          case "compile":
            write(await handlers.compile(req));
            break;
          case "parse_tree":
            write(await handlers.parseTree(req));
            break;
          case "run":
            write(await handlers.run(req));
            break;
          case "run_tests":
            write(await handlers.runTests(req));
            break;
        }
      } catch (err) {
        // The worker must survive anything a single request throws at it.
        write(protocolError(`${(err as Error).name}: ${(err as Error).message}`));
      }
    });
  });

  await new Promise<void>((resolve) => {
    reader.on("close", () => {
      chain.then(() => {
        analyzer.close();
        resolve();
      });
    });
  });
}

if (require.main === module) {
  serve().then(
    () => process.exit(0),
    (err) => {
      process.stderr.write(`fatal: ${err}\n`);
      process.exit(1);
    },
  );
}

#!/usr/bin/env node
/**
 * Stdio backend server: one JSON request per stdin line, exactly one
 * response line per request. Malformed lines get an error response and the
 * loop keeps going; the process exits 0 when stdin closes.
 *
 * Modes:
 *   --mode dummy (default)   deterministic stages driven by --seed
 *   --mode custom            delegate to a module given with --handlers;
 *                            it must export detect, segment and classify
 *                            functions (request in, response payload out)
 */

import { createInterface } from "node:readline";
import { pathToFileURL } from "node:url";
import { resolve } from "node:path";

import { HandlerHooks, errorResponse, makeHandler } from "./handler.js";

interface CliArgs {
  mode: "dummy" | "custom";
  seed: number;
  handlers?: string;
}

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { mode: "dummy", seed: 0 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    if (flag === "--mode") {
      const value = argv[++i];
      if (value !== "dummy" && value !== "custom") {
        throw new Error(`unknown mode ${value}`);
      }
      args.mode = value;
    } else if (flag === "--seed") {
      const value = Number(argv[++i]);
      if (!Number.isInteger(value)) throw new Error("--seed must be an integer");
      args.seed = value;
    } else if (flag === "--handlers") {
      args.handlers = argv[++i];
    } else {
      throw new Error(`unknown flag ${flag}`);
    }
  }
  if (args.mode === "custom" && !args.handlers) {
    throw new Error("--mode custom requires --handlers <module>");
  }
  if (args.mode === "dummy" && args.handlers) {
    throw new Error("--handlers is only valid with --mode custom");
  }
  return args;
}

async function loadHooks(path: string): Promise<HandlerHooks> {
  const mod = await import(pathToFileURL(resolve(path)).href);
  for (const name of ["detect", "segment", "classify"] as const) {
    if (typeof mod[name] !== "function") {
      throw new Error(`handlers module must export a ${name} function`);
    }
  }
  return { detect: mod.detect, segment: mod.segment, classify: mod.classify };
}

async function main(): Promise<void> {
  let args: CliArgs;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    process.exit(2);
  }
  let hooks: HandlerHooks | undefined;
  if (args.mode === "custom") {
    try {
      hooks = await loadHooks(args.handlers!);
    } catch (err) {
      process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
      process.exit(2);
    }
  }
  const handle = makeHandler(args.seed, hooks);

  process.stdout.on("error", () => process.exit(1));

  const rl = createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (raw) => {
    const line = raw.trim();
    if (!line) return;
    let response;
    try {
      response = handle(JSON.parse(line));
    } catch {
      response = errorResponse("", "malformed", "line is not valid JSON");
    }
    process.stdout.write(JSON.stringify(response) + "\n");
  });
  rl.on("close", () => process.exit(0));
}

void main();

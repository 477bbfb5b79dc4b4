/**
 * Subprocess gateway to the panokit core CLI.
 *
 * The binding never reimplements core math: every exposed function is
 * one CLI invocation exchanging PFM files in a scratch directory, so
 * outputs are bitwise the core's.  Set PANOKIT_CLI to override the
 * command (default: `python3 -m panokit.cli`).
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export class CoreError extends Error {
  constructor(message: string, public readonly exitCode: number | null) {
    super(message);
  }
}

export function coreCommand(): string[] {
  const env = process.env.PANOKIT_CLI;
  if (env && env.trim()) return env.trim().split(/\s+/);
  return ["python3", "-m", "panokit.cli"];
}

export function runCore(args: string[]): string {
  const [cmd, ...pre] = coreCommand();
  const proc = spawnSync(cmd, [...pre, ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) throw new CoreError(String(proc.error), null);
  if (proc.status !== 0) {
    throw new CoreError(
      `core exited with ${proc.status}: ${proc.stderr.trim()}`,
      proc.status,
    );
  }
  return proc.stdout;
}

export function coreVersion(): string {
  return runCore(["--version"]).trim();
}

/** Run a callback with a throwaway scratch directory. */
export function withScratch<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "panokit-"));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

/** Parse a `key value` per-line report into a map. */
export function parseReport(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const sp = trimmed.indexOf(" ");
    if (sp > 0) out.set(trimmed.slice(0, sp), trimmed.slice(sp + 1));
  }
  return out;
}

/** End-to-end round trip against a real service process.
 *
 * A scripted "human" drives a grid session to convergence through the
 * client code paths (view model + payload builder): it first edits every
 * recommended block toward its target pattern, then accepts
 * recommendations as-is once they match. A second, headless session
 * replays the same policy with raw HTTP calls; the server traces must
 * match turn for turn.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionClient, buildImprovementPayload } from "../src/api.js";
import type { Assignment, ProblemInfo } from "../src/types.js";
import { renderTurn } from "../src/viewmodel.js";

const PORT = 8765 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 120; i++) {
    try {
      const r = await fetch(`${BASE}/health`);
      if (r.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  const journal = mkdtempSync(join(tmpdir(), "elicit-ui-"));
  server = spawn("python3", ["-m", "partcl.cli", "serve",
    "--host", "127.0.0.1", "--port", String(PORT),
    "--journal-dir", journal],
    { cwd: join(__dirname, "..", ".."), stdio: "ignore" });
  await waitForHealth();
}, 90_000);

afterAll(() => {
  server?.kill();
});

function targetPattern(meta: ProblemInfo): Assignment {
  // checkerboard over the grid cells
  const cells = meta.metadata["cells"] as Record<string, [number, number]>;
  const target: Assignment = {};
  for (const [name, [r, c]] of Object.entries(cells)) {
    target[name] = (r + c) % 2;
  }
  return target;
}

interface TraceKey {
  t: number;
  part: string | null;
  satisfied: boolean;
  update_set: string;
}

async function driveSession(useClientHelpers: boolean):
    Promise<{ trace: TraceKey[]; x: Assignment }> {
  const client = new SessionClient(BASE);
  const problems = await client.listProblems();
  const meta = problems.find((p) => p.id === "grid")!;
  const target = targetPattern(meta);
  await client.createSession("grid", { selection: "smallest", seed: 0 });

  for (let turn = 0; turn < 100; turn++) {
    const rec = await client.recommendation();
    if (rec.phase === "converged") break;
    let payload: Assignment;
    if (useClientHelpers) {
      const view = renderTurn(meta, rec);
      const edits: Assignment = {};
      for (const cell of view.cells) {
        edits[cell.variable] = target[cell.variable];
      }
      payload = buildImprovementPayload(rec.assignment!, edits);
    } else {
      payload = {};
      for (const name of Object.keys(rec.assignment!)) {
        payload[name] = target[name];
      }
    }
    await client.submitImprovement(payload);
  }

  const state = await client.state();
  expect(state.phase).toBe("converged");
  return {
    trace: state.trace.map((r) => ({
      t: r.t, part: r.part, satisfied: r.satisfied,
      update_set: r.update_set,
    })),
    x: state.x,
  };
}

describe("grid session round trip", () => {
  it("drives to convergence and matches a headless session turn-for-turn",
      async () => {
    const ui = await driveSession(true);
    const headless = await driveSession(false);
    expect(ui.trace.length).toBeGreaterThan(0);
    expect(ui.trace).toEqual(headless.trace);
    expect(ui.x).toEqual(headless.x);
    // the configuration the sessions converged to is the target pattern
    const meta = (await new SessionClient(BASE).listProblems())
      .find((p) => p.id === "grid")!;
    expect(ui.x).toEqual(targetPattern(meta));
  }, 120_000);
});

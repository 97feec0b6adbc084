import { describe, expect, it } from "vitest";

import { buildImprovementPayload } from "../src/api.js";
import { progressData } from "../src/progress.js";
import type { ProblemInfo, Recommendation, TraceRow } from "../src/types.js";
import { renderTurn, validateEdits } from "../src/viewmodel.js";

const gridMeta: ProblemInfo = {
  id: "grid",
  kind: "grid",
  variables: 16,
  features: 24,
  parts: ["b00", "b01", "b10", "b11"],
  metadata: {
    kind: "grid",
    cells: { n00: [0, 0], n01: [0, 1], n10: [1, 0], n11: [1, 1] },
  },
};

const gridTurn: Recommendation = {
  phase: "awaiting-improvement",
  t: 3,
  part: 0,
  part_name: "b00",
  assignment: { n00: 0, n01: 1, n10: 1, n11: 0 },
  context: {
    neighbors: { b01: { n02: 0, n03: 1 }, b10: { n20: 1 } },
    global_summaries: {},
    gauges: [],
  },
};

describe("renderTurn", () => {
  it("renders a grid turn as editable binary cells with context", () => {
    const view = renderTurn(gridMeta, gridTurn);
    expect(view).toMatchSnapshot();
    expect(view.cells).toHaveLength(4);
    expect(view.cells.every((c) => c.editable)).toBe(true);
    expect(view.cells.every((c) => c.domain.length === 2)).toBe(true);
    expect(view.contextPanels.map((p) => p.title)).toEqual(["b01", "b10"]);
  });

  it("locks unavailable training slots", () => {
    const meta: ProblemInfo = {
      id: "training", kind: "training", variables: 35, features: 112,
      parts: ["day0"],
      metadata: {
        kind: "training",
        activities: { "0": "rest", "1": "walking" },
        availability: [[true, true, false, false, true]],
      },
    };
    const rec: Recommendation = {
      phase: "awaiting-improvement", t: 1, part: 0, part_name: "day0",
      assignment: { day0_slot0: 1, day0_slot2: 0 },
      context: { neighbors: {}, global_summaries: {}, gauges: [] },
    };
    const view = renderTurn(meta, rec);
    const locked = view.cells.find((c) => c.variable === "day0_slot2")!;
    expect(locked.editable).toBe(false);
    const open = view.cells.find((c) => c.variable === "day0_slot0")!;
    expect(open.editable).toBe(true);
    expect(open.choices!["1"]).toBe("walking");
  });

  it("shows hotel gauges and type choices", () => {
    const meta: ProblemInfo = {
      id: "hotel", kind: "hotel", variables: 90, features: 140,
      parts: ["room0"],
      metadata: {
        kind: "hotel",
        types: { "0": "unassigned", "1": "normal", "2": "suite", "3": "dorm" },
      },
    };
    const rec: Recommendation = {
      phase: "awaiting-improvement", t: 2, part: 0, part_name: "room0",
      assignment: { room0_type: 1, room0_single_bed: 2 },
      context: {
        neighbors: { room1: { room1_type: 0 } },
        global_summaries: { total_cost: 0.42 },
        gauges: [{ label: "budget used", value: 42.0, unit: "%" }],
      },
    };
    const view = renderTurn(meta, rec);
    expect(view.gauges).toEqual([{ label: "budget used", text: "42%" }]);
    const typeCell = view.cells.find((c) => c.variable === "room0_type")!;
    expect(typeCell.choices!["2"]).toBe("suite");
    expect(view.contextPanels.at(-1)!.title).toBe("overall");
  });

  it("renders the converged review screen", () => {
    const rec: Recommendation = {
      phase: "converged", t: 9, final: { n00: 1 },
    };
    const view = renderTurn(gridMeta, rec);
    expect(view.converged).toBe(true);
    expect(view.finalAssignment).toEqual({ n00: 1 });
    expect(view.cells).toHaveLength(0);
  });

  it("is a pure function of its inputs", () => {
    const a = renderTurn(gridMeta, gridTurn);
    const b = renderTurn(gridMeta, gridTurn);
    expect(a).toEqual(b);
  });
});

describe("validateEdits", () => {
  it("rejects values outside the domain and foreign variables", () => {
    const view = renderTurn(gridMeta, gridTurn);
    expect(validateEdits(view, { n00: 1 })).toEqual([]);
    expect(validateEdits(view, { n00: 7 })).toHaveLength(1);
    expect(validateEdits(view, { n99: 1 })).toHaveLength(1);
  });
});

describe("buildImprovementPayload", () => {
  it("never touches variables outside the recommended part", () => {
    // 50-turn fuzz: random edits, including hostile ones aimed at other
    // parts, must never leak into the payload
    let seed = 12345;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) & 0x7fffffff;
      return seed / 0x7fffffff;
    };
    for (let turn = 0; turn < 50; turn++) {
      const partVars = [`p${turn}_a`, `p${turn}_b`, `p${turn}_c`];
      const recommended: Record<string, number> = {};
      for (const v of partVars) recommended[v] = Math.floor(rand() * 3);
      const edits: Record<string, number> = {};
      for (const v of partVars) {
        if (rand() < 0.5) edits[v] = Math.floor(rand() * 3);
      }
      edits[`other${turn}_z`] = 9;  // outside the part
      edits["unrelated"] = 1;
      const payload = buildImprovementPayload(recommended, edits);
      expect(Object.keys(payload).sort()).toEqual(partVars.sort());
      for (const v of partVars) {
        expect(payload[v]).toBe(
          Object.prototype.hasOwnProperty.call(edits, v) && v in edits
            ? edits[v] : recommended[v]);
      }
    }
  });
});

describe("progressData", () => {
  const row = (t: number, satisfied: boolean): TraceRow => ({
    t, part: "b00", satisfied, update_set: "I",
    est_gain_I: satisfied ? 0 : 1.5, est_gain_J: 0,
  });

  it("empty trace gives an empty chart", () => {
    const data = progressData([], 4);
    expect(data.points).toEqual([]);
    expect(data.convergenceBanner).toBe(false);
  });

  it("k turns give k points", () => {
    const data = progressData([row(1, false), row(2, true)], 4);
    expect(data.points).toHaveLength(2);
    expect(data.points[0].estimatedGain).toBe(1.5);
    expect(data.satisfiedStreak).toBe(1);
  });

  it("a streak of two sweeps raises the banner", () => {
    const trace = Array.from({ length: 8 }, (_v, i) => row(i + 1, true));
    expect(progressData(trace, 4).convergenceBanner).toBe(true);
    expect(progressData(trace.slice(0, 7), 4).convergenceBanner).toBe(false);
  });
});

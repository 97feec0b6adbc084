/** Pure render models: (problem metadata, recommendation) -> view data.
 *
 * Problem-specific editors are selected by the problem's metadata kind;
 * unknown kinds fall back to a generic variable table so new problems
 * work without client changes. Everything here is a pure function of its
 * inputs, which keeps rendering snapshot-testable without a DOM.
 */

import type { Assignment, ProblemInfo, Recommendation } from "./types.js";

export interface EditableCell {
  variable: string;
  value: number;
  domain: number[];
  editable: boolean;
  label: string;
  choices?: Record<string, string>; // value label lookup, when categorical
}

export interface ContextPanelEntry {
  title: string;
  lines: string[];
}

export interface TurnView {
  kind: string;
  phase: string;
  turn: number;
  partLabel: string;
  cells: EditableCell[];
  contextPanels: ContextPanelEntry[];
  gauges: { label: string; text: string }[];
  converged: boolean;
  finalAssignment?: Assignment;
}

function domainOf(meta: ProblemInfo, variable: string): number[] {
  const domains = meta.metadata["domains"] as Record<string, number[]> | undefined;
  if (domains && domains[variable]) return domains[variable];
  return [];
}

function gridCellLabel(meta: ProblemInfo, variable: string): string {
  const cells = meta.metadata["cells"] as Record<string, [number, number]>;
  if (cells && cells[variable]) {
    const [r, c] = cells[variable];
    return `row ${r}, col ${c}`;
  }
  return variable;
}

function activityChoices(meta: ProblemInfo): Record<string, string> {
  return (meta.metadata["activities"] as Record<string, string>) ?? {};
}

export function renderTurn(meta: ProblemInfo, rec: Recommendation): TurnView {
  const kind = (meta.metadata["kind"] as string) ?? "generic";
  if (rec.phase === "converged") {
    return {
      kind, phase: rec.phase, turn: rec.t, partLabel: "",
      cells: [], contextPanels: [], gauges: [], converged: true,
      finalAssignment: rec.final,
    };
  }
  const assignment = rec.assignment ?? {};
  const context = rec.context ?? { neighbors: {}, global_summaries: {}, gauges: [] };

  const cells: EditableCell[] = Object.keys(assignment).sort().map((name) => {
    const cell: EditableCell = {
      variable: name,
      value: assignment[name],
      domain: domainOf(meta, name),
      editable: true,
      label: name,
    };
    if (kind === "grid") {
      cell.label = gridCellLabel(meta, name);
      cell.domain = [0, 1];
    } else if (kind === "training") {
      cell.choices = activityChoices(meta);
      cell.domain = Object.keys(cell.choices).map(Number).sort((a, b) => a - b);
      const m = name.match(/day(\d+)_slot(\d+)/);
      if (m) {
        cell.label = `slot ${m[2]}`;
        const availability = meta.metadata["availability"] as boolean[][];
        if (availability && !availability[Number(m[1])][Number(m[2])]) {
          cell.editable = false;
          cell.label += " (unavailable)";
        }
      }
    } else if (kind === "hotel") {
      const m = name.match(/room(\d+)_(.+)/);
      if (m) cell.label = m[2].replace(/_/g, " ");
      if (name.endsWith("_type")) {
        cell.choices = (meta.metadata["types"] as Record<string, string>) ?? {};
        cell.domain = Object.keys(cell.choices).map(Number).sort((a, b) => a - b);
      }
    }
    return cell;
  });

  const contextPanels: ContextPanelEntry[] = Object.keys(context.neighbors)
    .sort()
    .map((partName) => ({
      title: partName,
      lines: Object.keys(context.neighbors[partName]).sort().map(
        (v) => `${v} = ${context.neighbors[partName][v]}`),
    }));
  if (Object.keys(context.global_summaries).length) {
    contextPanels.push({
      title: "overall",
      lines: Object.keys(context.global_summaries).sort().map(
        (f) => `${f}: ${round3(context.global_summaries[f])}`),
    });
  }

  return {
    kind,
    phase: rec.phase,
    turn: rec.t,
    partLabel: rec.part_name ?? "",
    cells,
    contextPanels,
    gauges: context.gauges.map((g) => ({
      label: g.label,
      text: `${round3(g.value)}${g.unit}`,
    })),
    converged: false,
  };
}

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}

/** Client-side domain check mirroring the variable domains. */
export function validateEdits(view: TurnView, edits: Assignment): string[] {
  const problems: string[] = [];
  const byName = new Map(view.cells.map((c) => [c.variable, c]));
  for (const [name, value] of Object.entries(edits)) {
    const cell = byName.get(name);
    if (!cell) {
      problems.push(`${name} is not part of this turn`);
    } else if (!cell.editable) {
      problems.push(`${name} is locked`);
    } else if (cell.domain.length && !cell.domain.includes(value)) {
      problems.push(`${name} cannot take value ${value}`);
    }
  }
  return problems;
}

/** DOM wiring: renders turn views, collects edits, drives the turn loop. */

import { ApiError, SessionClient, buildImprovementPayload } from "./api.js";
import { progressData } from "./progress.js";
import type { Assignment, ProblemInfo } from "./types.js";
import { TurnView, renderTurn, validateEdits } from "./viewmodel.js";

export class ElicitApp {
  private edits: Assignment = {};
  private view: TurnView | null = null;
  private meta: ProblemInfo | null = null;
  private busy = false;

  constructor(private client: SessionClient, private root: HTMLElement) {}

  async start(problem: string): Promise<void> {
    const problems = await this.client.listProblems();
    this.meta = problems.find((p) => p.id === problem) ?? null;
    if (!this.meta) throw new Error(`unknown problem ${problem}`);
    await this.client.createSession(problem);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const rec = await this.client.recommendation();
    this.view = renderTurn(this.meta!, rec);
    this.edits = {};
    this.render();
  }

  private collectEdits(): Assignment {
    return { ...this.edits };
  }

  async submit(acceptAsIs: boolean): Promise<void> {
    if (this.busy || !this.view || this.view.converged) return;
    const rec = await this.client.recommendation();
    const edits = acceptAsIs ? {} : this.collectEdits();
    const problems = validateEdits(this.view, edits);
    if (problems.length) {
      this.showError(problems.join("; "));
      return;
    }
    const payload = buildImprovementPayload(rec.assignment ?? {}, edits);
    this.busy = true;
    try {
      const result = await this.client.submitImprovement(payload);
      this.showStatus(result.satisfied
        ? `turn ${result.t}: accepted as is (streak ${result.clean_streak})`
        : `turn ${result.t}: learned from your edit (${result.update_set})`);
      await this.refresh();
      await this.renderProgress();
    } catch (err) {
      if (err instanceof ApiError && err.body.code === "infeasible") {
        this.showError(
          `infeasible: violates ${err.body.details.join(", ")}`);
      } else {
        this.showError(String(err));
      }
    } finally {
      this.busy = false;
    }
  }

  private async renderProgress(): Promise<void> {
    const state = await this.client.state();
    const data = progressData(state.trace, this.meta!.parts.length);
    const panel = this.root.querySelector("#progress")!;
    panel.innerHTML = "";
    const streak = document.createElement("p");
    streak.textContent =
      `turns: ${data.totalTurns}, satisfied streak: ${data.satisfiedStreak}`;
    panel.appendChild(streak);
    if (data.convergenceBanner) {
      const banner = document.createElement("p");
      banner.className = "banner";
      banner.textContent = "converged: no further improvements needed";
      panel.appendChild(banner);
    }
  }

  private showError(message: string): void {
    const el = this.root.querySelector("#message")!;
    el.textContent = message;
    el.className = "error";
  }

  private showStatus(message: string): void {
    const el = this.root.querySelector("#message")!;
    el.textContent = message;
    el.className = "status";
  }

  private render(): void {
    const view = this.view!;
    const turn = this.root.querySelector("#turn")!;
    turn.innerHTML = "";
    if (view.converged) {
      const done = document.createElement("h2");
      done.textContent = `converged after ${view.turn} turns`;
      turn.appendChild(done);
      const pre = document.createElement("pre");
      pre.textContent = JSON.stringify(view.finalAssignment, null, 2);
      turn.appendChild(pre);
      return;
    }
    const heading = document.createElement("h2");
    heading.textContent = `turn ${view.turn}: ${view.partLabel}`;
    turn.appendChild(heading);

    const editor = document.createElement("div");
    editor.className = "editor";
    for (const cell of view.cells) {
      const rowEl = document.createElement("label");
      rowEl.textContent = cell.label + " ";
      const select = document.createElement("select");
      select.disabled = !cell.editable;
      for (const value of cell.domain) {
        const opt = document.createElement("option");
        opt.value = String(value);
        opt.textContent = cell.choices?.[String(value)] ?? String(value);
        opt.selected = value === cell.value;
        select.appendChild(opt);
      }
      select.addEventListener("change", () => {
        this.edits[cell.variable] = Number(select.value);
      });
      rowEl.appendChild(select);
      editor.appendChild(rowEl);
    }
    turn.appendChild(editor);

    const contextEl = document.createElement("div");
    contextEl.className = "context";
    for (const panel of view.contextPanels) {
      const box = document.createElement("div");
      const title = document.createElement("h3");
      title.textContent = panel.title;
      box.appendChild(title);
      for (const line of panel.lines) {
        const p = document.createElement("p");
        p.textContent = line;
        box.appendChild(p);
      }
      contextEl.appendChild(box);
    }
    for (const gauge of view.gauges) {
      const p = document.createElement("p");
      p.className = "gauge";
      p.textContent = `${gauge.label}: ${gauge.text}`;
      contextEl.appendChild(p);
    }
    turn.appendChild(contextEl);
  }
}

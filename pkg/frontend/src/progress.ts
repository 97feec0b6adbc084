/** Learning-progress panel data from the public trace.
 *
 * The hidden utility is unknown live, so the panel plots the estimated
 * utility gain of each accepted improvement under the learned weights and
 * the running streak of satisfied turns.
 */

import type { TraceRow } from "./types.js";

export interface ProgressPoint {
  t: number;
  estimatedGain: number;
  satisfied: boolean;
}

export interface ProgressData {
  points: ProgressPoint[];
  satisfiedStreak: number;
  totalTurns: number;
  convergenceBanner: boolean;
}

export function progressData(trace: TraceRow[], numParts: number): ProgressData {
  const points = trace.map((row) => ({
    t: row.t,
    estimatedGain: row.update_set === "I" ? row.est_gain_I : row.est_gain_J,
    satisfied: row.satisfied,
  }));
  let streak = 0;
  for (let i = trace.length - 1; i >= 0; i--) {
    if (!trace[i].satisfied) break;
    streak += 1;
  }
  return {
    points,
    satisfiedStreak: streak,
    totalTurns: trace.length,
    convergenceBanner: streak >= 2 * numParts,
  };
}

"""Online preference learning from part-wise improvements.

One step of the part-wise loop: pick a part, infer its best assignment
under the current weights using only the features credited exclusively to
it, carry the rest of the configuration over, ask the improvement provider
for a (possibly identical) better partial assignment, and apply a
perceptron update on either the part's full feature subset I or its
exclusive subset J. I is safe to update only when the improvement does not
already look better under the current weights on I; otherwise the update
falls back to J, whose objective the inferred assignment maximizes by
construction.

The classic full-configuration loop (used as a baseline) is the same
protocol with a single part covering everything and updates on all
coordinates.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .compile import Restriction
from .gai import GaiDecomposition, decompose
from .inference import infer_full, infer_part
from .model import (EPS, Configuration, InfeasibleError, PartialConfiguration,
                    ProblemModel)

#: provider(model, current_config, part_id, feature_subset) -> improvement
ImprovementProvider = Callable[
    [ProblemModel, Configuration, int, list[int]], PartialConfiguration]


@dataclass
class IterationRecord:
    t: int
    part: int | None                      # None for full-configuration steps
    objective_I: tuple[int, ...]
    objective_J: tuple[int, ...]
    recommended: PartialConfiguration
    improvement: PartialConfiguration
    update_set: str                       # "I" or "J"
    satisfied: bool
    est_gain_I: float                     # improvement minus recommendation, on I, under w^t
    est_gain_J: float                     # same on J (<= EPS by inference optimality)
    update_gain: float                    # est gain on the updated coordinate set
    inference_seconds: float
    zeta: float | None = None             # filled by the harness (needs true weights)
    conditional_regret: float | None = None

    def to_json(self, model: ProblemModel) -> dict:
        return {
            "t": self.t,
            "part": None if self.part is None else model.parts[self.part].name,
            "objective_I": list(self.objective_I),
            "objective_J": list(self.objective_J),
            "recommended": dict(zip(
                (model.variables[v].name for v in self.recommended.variables),
                self.recommended.values)),
            "improvement": dict(zip(
                (model.variables[v].name for v in self.improvement.variables),
                self.improvement.values)),
            "update_set": self.update_set,
            "satisfied": self.satisfied,
            "est_gain_I": self.est_gain_I,
            "est_gain_J": self.est_gain_J,
            "inference_seconds": self.inference_seconds,
            "zeta": self.zeta,
            "conditional_regret": self.conditional_regret,
        }


@dataclass
class LearnerState:
    model: ProblemModel
    decomposition: GaiDecomposition
    strategy: object
    w: np.ndarray
    x: Configuration
    t: int = 1
    mode: str = "exhaustive"              # part-inference mode
    trace: list[IterationRecord] = field(default_factory=list)
    # (part, user satisfied, configuration unchanged by inference)
    recent_visits: list[tuple[int, bool, bool]] = field(default_factory=list)

    @staticmethod
    def create(model: ProblemModel, strategy, decomposition=None,
               initial: Configuration | None = None,
               mode: str = "exhaustive") -> "LearnerState":
        dec = decomposition or decompose(model)
        if initial is None:
            initial = initial_configuration(model)
        ok, violated = model.check_feasible(initial)
        if not ok:
            raise InfeasibleError("initial configuration infeasible", violated)
        return LearnerState(model=model, decomposition=dec, strategy=strategy,
                            w=np.zeros(model.num_features), x=initial,
                            mode=mode)

    def reward_scale(self) -> float:
        return 2.0 * self.model.feature_bound * self.model.part_feature_bound


def initial_configuration(model: ProblemModel) -> Configuration:
    """Lexicographically smallest feasible configuration."""
    from .search import _sweep_plan
    plan = _sweep_plan(model)
    row = np.empty(model.num_vars, dtype=np.int64)
    for pid, pd in enumerate(plan.parts):
        row[list(model.parts[pid].variables)] = pd.cands[0]
    x = Configuration(model.compiled.decode(row))
    if model.check_feasible(x)[0]:
        return x
    return infer_full(model, np.zeros(model.num_features)).config


def _part_row(model: ProblemModel, partial: PartialConfiguration) -> np.ndarray:
    return np.array([[model.code_of(v, val) for v, val
                      in zip(partial.variables, partial.values)]],
                    dtype=np.int64)


def _restricted_values(model, part, x_remainder_codes, objective, w, rows):
    rest = Restriction(model, model.parts[part].variables, x_remainder_codes,
                       objective, w)
    return rest.values(rows)


@dataclass
class PendingTurn:
    """A proposed recommendation waiting for the user's improvement."""

    part: int
    objective_I: tuple[int, ...]
    objective_J: tuple[int, ...]
    remainder: PartialConfiguration
    recommended: PartialConfiguration
    config: Configuration                 # recommendation combined with remainder
    inference_seconds: float


def propose_turn(state: LearnerState) -> PendingTurn:
    """Select a part and infer its recommendation on the exclusive subset,
    carrying the rest of the configuration over."""
    model = state.model
    part = state.strategy.select()
    I = sorted(model.parts[part].features)
    J = sorted(state.decomposition.J_of_part(part))
    remainder = model.complement(state.x, part)
    t0 = time.perf_counter()
    res = infer_part(model, state.w, J, part, remainder, mode=state.mode)
    dt = time.perf_counter() - t0
    return PendingTurn(part=part, objective_I=tuple(I), objective_J=tuple(J),
                       remainder=remainder, recommended=res.partial,
                       config=res.config, inference_seconds=dt)


def apply_improvement(state: LearnerState, pending: PendingTurn,
                      improvement: PartialConfiguration) -> IterationRecord:
    """Validate the user's improvement and apply the two-tier update."""
    model = state.model
    part = pending.part
    I, J = list(pending.objective_I), list(pending.objective_J)
    _validate_improvement(model, part, pending.remainder, improvement)

    fixed = np.full(model.num_vars, -1, dtype=np.int64)
    for v, val in zip(pending.remainder.variables, pending.remainder.values):
        fixed[v] = model.code_of(v, val)
    rows = np.vstack([_part_row(model, pending.recommended),
                      _part_row(model, improvement)])
    u_I = _restricted_values(model, part, fixed, I, state.w, rows)
    u_J = _restricted_values(model, part, fixed, J, state.w, rows)
    est_gain_I = float(u_I[1] - u_I[0])
    est_gain_J = float(u_J[1] - u_J[0])

    # two-tier update rule: I is safe while the improvement does not already
    # rank higher under the current weights on I
    if est_gain_I <= EPS:
        update_set, objective = "I", I
        update_gain = est_gain_I
    else:
        update_set, objective = "J", J
        update_gain = est_gain_J

    satisfied = improvement == pending.recommended
    if not satisfied:
        cm = model.compiled
        full_rec = cm.encode(pending.config.values)
        full_hat = full_rec.copy()
        for v, val in zip(improvement.variables, improvement.values):
            full_hat[v] = model.code_of(v, val)
        phi = cm.phi(np.vstack([full_hat, full_rec]))
        diff = phi[0] - phi[1]
        state.w[objective] += diff[objective]

    record = IterationRecord(
        t=state.t, part=part, objective_I=tuple(I), objective_J=tuple(J),
        recommended=pending.recommended, improvement=improvement,
        update_set=update_set, satisfied=satisfied, est_gain_I=est_gain_I,
        est_gain_J=est_gain_J, update_gain=update_gain,
        inference_seconds=pending.inference_seconds)
    state.trace.append(record)
    stable = pending.config == state.x
    state.x = pending.config
    state.t += 1

    scale = state.reward_scale()
    reward = min(max(update_gain, 0.0), scale) / scale if scale else 0.0
    state.strategy.record(part, reward)

    state.recent_visits.append((part, satisfied, stable))
    horizon = 2 * model.num_parts
    if len(state.recent_visits) > horizon:
        del state.recent_visits[:-horizon]
    return record


def pcl_step(state: LearnerState, provider: ImprovementProvider,
             ) -> IterationRecord:
    """One part-wise elicitation turn; mutates and returns via the record."""
    pending = propose_turn(state)
    improvement = provider(state.model, pending.config, pending.part,
                           list(pending.objective_I))
    return apply_improvement(state, pending, improvement)


def has_converged(state: LearnerState) -> bool:
    """Two clean sweeps: the last 2n part visits covered every part at
    least twice, the user never changed anything, and inference never
    revised the configuration.

    The stability requirement is what makes the rule sound: a part revised
    by inference early in the window would invalidate the satisfied
    verdicts of parts whose last visit preceded the revision. With the
    configuration fixed across the window, every part was certified
    conditionally optimal against exactly the final configuration.
    """
    n = state.model.num_parts
    window = state.recent_visits[-2 * n:]
    if len(window) < 2 * n:
        return False
    if not all(sat and stable for _p, sat, stable in window):
        return False
    counts = [0] * n
    for p, _sat, _stable in window:
        counts[p] += 1
    return all(c >= 2 for c in counts)


def _validate_improvement(model, part, remainder, improvement) -> None:
    expected = tuple(model.parts[part].variables)
    if tuple(improvement.variables) != expected:
        raise ValueError(
            f"improvement must assign exactly part {model.parts[part].name!r}")
    from .model import combine
    full = model.total(combine(improvement, remainder))
    ok, violated = model.check_feasible(full)
    if not ok:
        raise InfeasibleError("improvement infeasible", violated)


# ---------------------------------------------------------------------------
# Full-configuration baseline


FullImprovementProvider = Callable[[ProblemModel, Configuration], Configuration]


def cl_step(state: LearnerState, provider: FullImprovementProvider,
            full_mode: str = "auto") -> IterationRecord:
    """Classic coactive step: full inference, full improvement, full update."""
    model = state.model
    everything = list(range(model.num_features))
    t0 = time.perf_counter()
    res = infer_full(model, state.w, mode=full_mode)
    dt = time.perf_counter() - t0
    x_t = res.config

    x_hat = provider(model, x_t)
    ok, violated = model.check_feasible(x_hat)
    if not ok:
        raise InfeasibleError("improvement infeasible", violated)

    cm = model.compiled
    phi = cm.phi(np.vstack([cm.encode(x_hat.values), cm.encode(x_t.values)]))
    diff = phi[0] - phi[1]
    est_gain = float((diff * state.w).sum())
    satisfied = x_hat == x_t
    if not satisfied:
        state.w += diff

    all_parts = frozenset(range(model.num_parts))
    all_vars = tuple(range(model.num_vars))
    record = IterationRecord(
        t=state.t, part=None,
        objective_I=tuple(everything), objective_J=tuple(everything),
        recommended=PartialConfiguration(all_parts, all_vars, x_t.values),
        improvement=PartialConfiguration(all_parts, all_vars, x_hat.values),
        update_set="I", satisfied=satisfied, est_gain_I=est_gain,
        est_gain_J=est_gain, update_gain=est_gain, inference_seconds=dt)
    state.trace.append(record)
    stable = x_t == state.x
    state.x = x_t
    state.t += 1
    state.recent_visits.append((0, satisfied, stable))
    horizon = 2 * model.num_parts
    if len(state.recent_visits) > horizon:
        del state.recent_visits[:-horizon]
    return record


def dump_trace(state: LearnerState, path) -> None:
    """One JSON object per line, one line per iteration."""
    with open(path, "w") as fh:
        for rec in state.trace:
            fh.write(json.dumps(rec.to_json(state.model), sort_keys=True))
            fh.write("\n")

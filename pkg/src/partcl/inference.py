"""Exact inference over parts and full configurations.

``infer_part`` maximizes a partial utility over one part's variables with
the rest of the configuration fixed; ``infer_full`` maximizes over all
variables. Both come in an exhaustive-enumeration mode and a
branch-and-bound mode that must agree exactly.

Tie semantics: among candidates whose objective lies within EPS of the
maximum, the lexicographically smallest assignment (variable order, then
ascending value) wins. Both modes implement this by collecting every
near-maximal candidate and picking the lexicographically smallest row, so
the result does not depend on exploration order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compile import EnumerationTooLarge, Restriction
from .model import (EPS, Configuration, InfeasibleError, PartialConfiguration,
                    ProblemModel)

#: Default cap on exhaustively enumerated candidate rows.
ENUM_LIMIT = 1 << 21

MODES = ("exhaustive", "branch-and-bound", "auto")


@dataclass(frozen=True)
class InferenceRequest:
    model: ProblemModel
    weights: np.ndarray
    objective: tuple[int, ...]          # feature index set
    part: int | None                    # None = all variables
    remainder: PartialConfiguration | None
    mode: str = "exhaustive"


@dataclass(frozen=True)
class InferenceResult:
    partial: PartialConfiguration       # assignment over the inferred variables
    config: Configuration               # completed full configuration
    value: float                        # absolute objective utility at config
    candidates: int                     # candidate rows examined (exhaustive)


def infer(req: InferenceRequest) -> InferenceResult:
    if req.part is None:
        return infer_full(req.model, req.weights, objective=req.objective,
                          mode=req.mode)
    return infer_part(req.model, req.weights, req.objective, req.part,
                      req.remainder, mode=req.mode)


def _fixed_codes(model: ProblemModel, part_vars, remainder: PartialConfiguration,
                 ) -> np.ndarray:
    fixed = np.full(model.num_vars, -1, dtype=np.int64)
    expected = sorted(set(range(model.num_vars)) - set(part_vars))
    if list(remainder.variables) != expected:
        raise ValueError("remainder must assign exactly the complement variables")
    for v, val in zip(remainder.variables, remainder.values):
        fixed[v] = model.code_of(v, val)
    return fixed


def _lex_min_qualifier(rows: np.ndarray, values: np.ndarray) -> int:
    """Index of the lexicographically smallest row within EPS of the max."""
    vmax = values.max()
    qual = np.flatnonzero(values >= vmax - EPS)
    if qual.size == 1:
        return int(qual[0])
    sub = rows[qual]
    order = np.lexsort(sub.T[::-1])
    return int(qual[order[0]])


def _result_from_codes(model, part_ids, part_vars, codes_row, full_row, value,
                       candidates) -> InferenceResult:
    cm = model.compiled
    values_full = cm.decode(full_row)
    partial = PartialConfiguration(
        parts=frozenset(part_ids),
        variables=tuple(part_vars),
        values=tuple(values_full[v] for v in part_vars),
    )
    return InferenceResult(partial=partial, config=Configuration(values_full),
                           value=float(value), candidates=candidates)


def infer_part(model: ProblemModel, w, objective, part: int,
               remainder: PartialConfiguration, mode: str = "exhaustive",
               enum_limit: int = ENUM_LIMIT) -> InferenceResult:
    """argmax over one part's variables of the objective partial utility.

    Constraints fully determined by the part plus the fixed remainder are
    enforced; constraints lying entirely outside the part are ignored
    (the remainder never changes their truth).
    """
    if mode == "auto":
        mode = "exhaustive"
    if mode not in ("exhaustive", "branch-and-bound"):
        raise ValueError(f"unknown inference mode {mode!r}")
    p = model.parts[part]
    fixed = _fixed_codes(model, p.variables, remainder)
    rest = Restriction(model, p.variables, fixed, sorted(objective), np.asarray(w, dtype=float))
    if mode == "exhaustive":
        codes, values, idx, n = _exhaustive_over(rest, enum_limit)
    else:
        codes, values, idx, n = _bnb_over(rest)
    full = rest.complete(codes[idx][None, :])[0]
    return _result_from_codes(model, [part], p.variables, codes[idx], full,
                              values[idx], n)


def _exhaustive_over(rest: Restriction, enum_limit: int):
    codes = rest.enumerate(limit=enum_limit)
    feas = rest.feasible(codes)
    if not feas.any():
        raise InfeasibleError("no feasible completion",
                              violated=rest.violation_report(codes))
    codes = codes[feas]
    values = rest.values(codes)
    idx = _lex_min_qualifier(codes, values)
    return codes, values, idx, int(feas.size)


def infer_full(model: ProblemModel, w, objective=None, mode: str = "auto",
               enum_limit: int = ENUM_LIMIT) -> InferenceResult:
    """argmax over all variables; used by the full-configuration baseline
    and by regret computation."""
    if objective is None:
        objective = range(model.num_features)
    objective = sorted(objective)
    w = np.asarray(w, dtype=float)
    all_vars = tuple(range(model.num_vars))
    fixed = np.full(model.num_vars, -1, dtype=np.int64)
    all_parts = frozenset(range(model.num_parts))

    if mode not in MODES:
        raise ValueError(f"unknown inference mode {mode!r}")
    use_exhaustive = mode == "exhaustive"
    if mode == "auto":
        use_exhaustive = _full_space_size(model, enum_limit) <= enum_limit

    if use_exhaustive:
        codes, phi = full_evaluation(model, enum_limit)
        if codes.shape[0] == 0:
            raise InfeasibleError("no feasible configuration")
        if len(objective) == model.num_features:
            values = (phi * w).sum(axis=1)
        else:
            values = (phi[:, objective] * w[objective]).sum(axis=1)
        idx = _lex_min_qualifier(codes, values)
        return _result_from_codes(model, all_parts, all_vars, codes[idx],
                                  codes[idx], values[idx], codes.shape[0])

    from .search import branch_and_bound_full
    row, value, nodes = branch_and_bound_full(model, w, objective)
    return _result_from_codes(model, all_parts, all_vars, row, row, value, nodes)


def full_evaluation(model: ProblemModel, enum_limit: int = ENUM_LIMIT,
                    ) -> tuple[np.ndarray, np.ndarray]:
    """(feasible full code rows in lex order, their feature matrix), cached.

    Powers exhaustive full inference and full-configuration improvement
    lookups; objective values are recovered as (phi * w).sum(axis=1), the
    same reduction the restricted evaluator uses.
    """
    cm = model.compiled
    cached = getattr(cm, "_full_eval", None)
    if cached is None:
        codes = _enumerate_full(model, enum_limit)
        feas = cm.feasible(codes)
        codes = np.ascontiguousarray(codes[feas])
        phi = cm.phi(codes)
        cached = (codes, phi)
        cm._full_eval = cached
    return cached


def _parts_contiguous(model: ProblemModel) -> bool:
    flat: list[int] = []
    for p in model.parts:
        flat.extend(p.variables)
    return flat == list(range(model.num_vars))


def _full_space_size(model: ProblemModel, cap: int) -> int:
    """Candidate count for exhaustive full enumeration (capped)."""
    if _parts_contiguous(model):
        from .search import _sweep_plan
        total = 1
        for pd in _sweep_plan(model).parts:
            total *= pd.cands.shape[0]
            if total > cap:
                return total
        return total
    total = 1
    for var in model.variables:
        total *= len(var.domain)
        if total > cap:
            return total
    return total


def _enumerate_full(model: ProblemModel, limit: int) -> np.ndarray:
    """All full code rows in lexicographic order.

    When parts are contiguous in variable order, rows are the cross product
    of per-part internally feasible candidates, which enumerates the same
    feasible set as the raw domain product in the same order.
    """
    if not _parts_contiguous(model):
        rest = Restriction(model, tuple(range(model.num_vars)),
                           np.full(model.num_vars, -1, dtype=np.int64),
                           [], np.zeros(0))
        return rest.enumerate(limit=limit)
    from .search import _sweep_plan
    plan = _sweep_plan(model)
    sizes = [pd.cands.shape[0] for pd in plan.parts]
    total = 1
    for s in sizes:
        total *= s
    if total > limit:
        raise EnumerationTooLarge(f"candidate product exceeds {limit} rows")
    rows = np.empty((total, model.num_vars), dtype=np.int64)
    stride = total
    for pid, pd in enumerate(plan.parts):
        stride //= sizes[pid]
        idx = (np.arange(total) // stride) % sizes[pid]
        rows[:, list(model.parts[pid].variables)] = pd.cands[idx]
    return rows


# ---------------------------------------------------------------------------
# Branch-and-bound over one part's variables


def _bnb_over(rest: Restriction):
    """Depth-first search over the free variables (in declared order,
    values ascending) with admissible per-feature interval bounds.

    Collects every near-maximal leaf and picks the lexicographically
    smallest, matching the exhaustive mode's tie rule exactly. Bound
    pieces (per-variable table envelopes, literal statuses over the pruned
    domains) are precomputed so each node costs plain float arithmetic.
    """
    n_free = len(rest.free)

    # (w, const, trans, thresh, unary[(var, table, free_lo, free_hi)],
    #  terms[(coef, lits[(var, code, neg, free_status)])])
    plan = []
    for (const, tr, thresh, unary, terms), wf in zip(rest.structs, rest.w_sub):
        u = []
        for var, table in unary:
            codes = rest.allowed[var]
            vals = table[codes]
            u.append((var, table, float(vals.min()), float(vals.max())))
        tm = []
        for coef, lits in terms:
            ls = []
            for var, code, neg in lits:
                sat = (rest.allowed[var] == code) != neg
                status = 1 if sat.all() else (0 if not sat.any() else -1)
                ls.append((var, code, neg, status))
            tm.append((coef, ls))
        plan.append((float(wf), const, tr, thresh, u, tm))

    best: list[tuple[float, np.ndarray]] = []
    state = {"vmax": -np.inf, "leaves": 0}
    prefix = np.full(n_free, -1, dtype=np.int64)

    def node_bound(depth: int) -> float:
        # variables < depth are assigned (prefix), the rest range over
        # their pruned domains
        total = rest.offset
        for wf, const, tr, thresh, unary, terms in plan:
            lo = hi = const
            for var, table, fmin, fmax in unary:
                if var < depth:
                    v = table[prefix[var]]
                    lo += v
                    hi += v
                else:
                    lo += fmin
                    hi += fmax
            for coef, lits in terms:
                st = 1  # 1 true, 0 false, -1 open
                for var, code, neg, free_status in lits:
                    if var < depth:
                        if (prefix[var] == code) == neg:
                            st = 0
                            break
                    elif free_status == 0:
                        st = 0
                        break
                    elif free_status == -1:
                        st = -1
                if st == 1:
                    lo += coef
                    hi += coef
                elif st == -1:
                    if coef < 0.0:
                        lo += coef
                    else:
                        hi += coef
            if tr == 1:
                lo, hi = 2 * lo - 1, 2 * hi - 1
            elif tr == 2:
                lo = lo - thresh if lo > thresh else 0.0
                hi = hi - thresh if hi > thresh else 0.0
            total += wf * hi if wf >= 0 else wf * lo
        return total

    def offer(row: np.ndarray, value: float) -> None:
        state["leaves"] += 1
        if value > state["vmax"]:
            state["vmax"] = value
            best[:] = [(v, r) for v, r in best if v >= value - EPS]
        if value >= state["vmax"] - EPS:
            best.append((value, row.copy()))

    def descend(depth: int) -> None:
        if depth == n_free:
            row = prefix[None, :]
            if rest.feasible(row)[0]:
                offer(prefix, float(rest.values(row)[0]))
            return
        for code in rest.allowed[depth]:
            prefix[depth] = code
            if node_bound(depth + 1) < state["vmax"] - EPS:
                continue
            descend(depth + 1)
        prefix[depth] = -1

    descend(0)
    if not best:
        codes = rest.enumerate()
        raise InfeasibleError("no feasible completion",
                              violated=rest.violation_report(codes))
    vmax = state["vmax"]
    qual = [(v, r) for v, r in best if v >= vmax - EPS]
    qual.sort(key=lambda item: tuple(item[1]))
    value, row = qual[0]
    codes = np.asarray([row])
    return codes, np.asarray([value]), 0, state["leaves"]


# ---------------------------------------------------------------------------
# Local optimality


def certify_local_optimum(model: ProblemModel, w, x: Configuration,
                          ) -> tuple[bool, tuple[int, PartialConfiguration] | None]:
    """True iff no single-part change improves the utility by more than EPS.

    On failure returns the first improving part (ascending id) and the
    improving partial assignment as a witness.
    """
    w = np.asarray(w, dtype=float)
    for p in model.parts:
        remainder = model.complement(x, p.index)
        res = infer_part(model, w, sorted(p.features), p.index, remainder)
        current = _current_value(model, w, sorted(p.features), p, x)
        if res.value > current + EPS:
            return False, (p.index, res.partial)
    return True, None


def _current_value(model, w, objective, part, x: Configuration) -> float:
    fixed = _fixed_codes(model, part.variables,
                         model.complement(x, part.index))
    rest = Restriction(model, part.variables, fixed, objective, w)
    row = np.array([[model.code_of(v, x.values[v]) for v in part.variables]],
                   dtype=np.int64)
    return float(rest.values(row)[0])

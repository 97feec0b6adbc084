"""Exact full-configuration optimization for models too large to enumerate.

The optimizer sweeps the basic parts in declared order, branching over each
part's internally feasible assignments while merging search states that
agree on everything the remaining parts can observe:

- the truth of partially assigned multi-part conjunction terms,
- the accumulated left-hand side of constraints spanning parts,
- the accumulated expression prefix of multi-part hinge features
  (clamped to "dead" once the hinge can no longer activate, and to a
  linear payout once it is guaranteed active).

Features with a linear transform (identity or signed) fold exactly into
per-part candidate values, so only hinges contribute state. The sweep is a
branch-and-bound over parts with dominance merging; it returns the same
assignment and objective as exhaustive enumeration under the package's tie
rule (lexicographic among candidates within EPS of the maximum), provided
parts are declared in variable order.

A backward pass computes exact values-to-go; the final assignment is then
extracted greedily, picking at each part the lexicographically smallest
candidate that still admits a completion within EPS of the optimum.
"""

from __future__ import annotations

import numpy as np

from .compile import EnumerationTooLarge, Restriction, _pack_features
from .model import EPS, InfeasibleError, ProblemModel

PART_CAND_LIMIT = 1 << 17
STATE_LIMIT = 1 << 21

_SAT = np.int64(2 ** 62)     # hinge saturated: future contributions pay linearly
_DEAD = np.int64(-(2 ** 62))  # hinge can no longer activate
_QUANT = 1e9                  # float prefix quantization for state keys


class SweepUnsupported(RuntimeError):
    """Model shape outside the sweep optimizer's reach."""


def _q(x: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(x) * _QUANT).astype(np.int64)


def _rows_to_keys(mat: np.ndarray) -> np.ndarray:
    mat = np.ascontiguousarray(mat, dtype=np.int64)
    if mat.ndim == 1:
        mat = mat[:, None]
    void = np.dtype((np.void, mat.dtype.itemsize * mat.shape[1]))
    return mat.view(void).reshape(-1)


# ---------------------------------------------------------------------------
# Model-level plan (weight independent, cached on the compiled model)


class _PartData:
    def __init__(self, cands, feat_ids, contrib, colmin, colmax):
        self.cands = cands          # (n_cand, n_part_vars) codes, lex order
        self.feat_ids = feat_ids    # features touching this part
        self.contrib = contrib      # (n_cand, len(feat_ids)) expression contribution
        self.colmin = colmin
        self.colmax = colmax


class _CrossTerm:
    def __init__(self, fid, coef, lits_by_part):
        self.fid = fid
        self.coef = coef
        self.lits_by_part = lits_by_part
        parts = sorted(lits_by_part)
        self.first = parts[0]
        self.last = parts[-1]
        self.truth = {}             # part -> bool vec over candidates


class _CrossCon:
    def __init__(self, name, const, op, bound, cond_by_part, tabs_by_part, parts):
        self.name = name
        self.const = const
        self.op = op
        self.bound = bound
        self.cond_by_part = cond_by_part
        self.tabs_by_part = tabs_by_part
        self.parts = parts
        self.first = parts[0]
        self.last = parts[-1]
        self.cond = {}              # part -> bool vec
        self.lhs = {}               # part -> float vec


class _SweepPlan:
    """Per-model candidate sets and cross-part structure."""

    def __init__(self, model: ProblemModel):
        cm = model.compiled
        n_vars = model.num_vars
        self.part_of_var = np.empty(n_vars, dtype=np.int64)
        for p in model.parts:
            for v in p.variables:
                self.part_of_var[v] = p.index

        fixed = np.full(n_vars, -1, dtype=np.int64)
        self.parts: list[_PartData] = []
        for p in model.parts:
            future = np.ones(n_vars, dtype=bool)
            future[list(p.variables)] = False
            rest = Restriction(model, p.variables, fixed, [], np.zeros(0),
                               future=future)
            cands = rest.enumerate(limit=PART_CAND_LIMIT)
            feas = rest.feasible(cands)
            cands = cands[feas]
            if cands.shape[0] == 0:
                raise InfeasibleError(
                    f"part {p.name!r} has no internally feasible assignment")
            local = {int(v): i for i, v in enumerate(p.variables)}
            feat_ids = sorted(p.features)
            structs = []
            for fi in feat_ids:
                unary = [(local[v], tab) for v, tab in cm.folded_unary[fi]
                         if v in local]
                terms = []
                for coef, lits in cm.folded_terms[fi]:
                    if all(v in local for v, _c, _n in lits):
                        terms.append((coef, [(local[v], c, n)
                                             for v, c, n in lits]))
                structs.append((0.0, 0, 0.0, unary, terms))
            fa = _pack_features(structs)
            contrib = fa.phi(cands)
            self.parts.append(_PartData(
                cands, np.asarray(feat_ids, dtype=np.int64), contrib,
                contrib.min(axis=0), contrib.max(axis=0)))

        # cross terms: conjunctions spanning several parts
        self.cross_terms: list[_CrossTerm] = []
        self.cross_of_feature: dict[int, list[_CrossTerm]] = {}
        for fi in range(model.num_features):
            for coef, lits in cm.folded_terms[fi]:
                parts = {int(self.part_of_var[v]) for v, _c, _n in lits}
                if len(parts) <= 1:
                    continue
                by_part: dict[int, list] = {}
                for v, c, n in lits:
                    by_part.setdefault(int(self.part_of_var[v]), []).append((v, c, n))
                ct = _CrossTerm(fi, coef, by_part)
                for pid, plits in by_part.items():
                    pd = self.parts[pid]
                    lk = {int(v): i for i, v in enumerate(model.parts[pid].variables)}
                    vec = np.ones(pd.cands.shape[0], dtype=bool)
                    for v, c, n in plits:
                        hit = pd.cands[:, lk[v]] == c
                        vec &= ~hit if n else hit
                    ct.truth[pid] = vec
                self.cross_terms.append(ct)
                self.cross_of_feature.setdefault(fi, []).append(ct)

        # constraints spanning several parts
        self.cross_cons: list[_CrossCon] = []
        domains = model.domains
        for ci, c in enumerate(model.hard_constraints):
            parts = sorted({int(self.part_of_var[v]) for v in c.scope})
            if len(parts) <= 1:
                continue
            cond_by_part: dict[int, list] = {}
            for lit in c.condition:
                cond_by_part.setdefault(int(self.part_of_var[lit.var]), []).append(lit)
            tabs_by_part: dict[int, list] = {}
            for t in c.tables:
                tabs_by_part.setdefault(int(self.part_of_var[t.var]), []).append(t)
            cc = _CrossCon(c.name, 0.0, c.op, c.bound, cond_by_part,
                           tabs_by_part, parts)
            for pid in parts:
                pd = self.parts[pid]
                lk = {int(v): i for i, v in enumerate(model.parts[pid].variables)}
                vec = np.ones(pd.cands.shape[0], dtype=bool)
                for lit in cond_by_part.get(pid, []):
                    code = domains[lit.var].index(lit.value)
                    hit = pd.cands[:, lk[lit.var]] == code
                    vec &= ~hit if lit.negate else hit
                cc.cond[pid] = vec
                lhs = np.zeros(pd.cands.shape[0])
                for t in tabs_by_part.get(pid, []):
                    lhs += np.asarray(t.table)[pd.cands[:, lk[t.var]]]
                cc.lhs[pid] = lhs
            self.cross_cons.append(cc)


def _sweep_plan(model: ProblemModel) -> _SweepPlan:
    cm = model.compiled
    plan = getattr(cm, "_sweep_plan", None)
    if plan is None:
        plan = _SweepPlan(model)
        cm._sweep_plan = plan
    return plan


# ---------------------------------------------------------------------------
# Sweep optimization for a specific objective


class _Layout:
    """State layout at one boundary: tracked bits and float slots."""

    def __init__(self):
        self.term_bits: list[int] = []   # indices into plan.cross_terms
        self.con_bits: list[int] = []    # indices into plan.cross_cons
        self.con_slots: list[int] = []   # same order as con_bits
        self.hinge_slots: list[int] = [] # feature ids


def part_sweep_optimum(model: ProblemModel, w, objective,
                       state_limit: int = STATE_LIMIT):
    """Exact argmax of the objective partial utility over all variables.

    Returns (full code row, canonical objective value, state count).
    """
    w = np.asarray(w, dtype=float)
    plan = _sweep_plan(model)
    n_parts = model.num_parts
    obj = sorted(objective)
    obj_set = set(obj)

    feat_parts = [sorted({int(plan.part_of_var[v]) for v in f.scope})
                  for f in model.features]

    hinge_multi = []
    const_a = 0.0
    beta = np.zeros(model.num_features)
    single = {}
    for fi in obj:
        f = model.features[fi]
        parts = feat_parts[fi]
        if len(parts) == 1:
            single.setdefault(parts[0], []).append(fi)
        elif f.transform == "hinge":
            if plan.cross_of_feature.get(fi):
                raise SweepUnsupported(
                    "hinge feature with cross-part conjunction terms")
            hinge_multi.append(fi)
        elif f.transform == "identity":
            beta[fi] = w[fi]
        else:  # signed: w * (2e - 1)
            beta[fi] = 2.0 * w[fi]
            const_a += -w[fi]

    # per-part candidate base values
    base = []
    for pid in range(n_parts):
        pd = plan.parts[pid]
        v = np.zeros(pd.cands.shape[0])
        for col, fi in enumerate(pd.feat_ids):
            if fi not in obj_set:
                continue
            f = model.features[fi]
            if len(feat_parts[fi]) == 1:
                e = pd.contrib[:, col]
                if f.transform == "identity":
                    v += w[fi] * e
                elif f.transform == "signed":
                    v += w[fi] * (2.0 * e - 1.0)
                else:
                    v += w[fi] * np.maximum(0.0, e - f.threshold)
            elif f.transform != "hinge":
                v += beta[fi] * pd.contrib[:, col]
        base.append(v)

    # hinge future-contribution envelopes per boundary
    h_future_min = {fi: np.zeros(n_parts + 1) for fi in hinge_multi}
    h_future_max = {fi: np.zeros(n_parts + 1) for fi in hinge_multi}
    for fi in hinge_multi:
        lo = hi = 0.0
        for b in range(n_parts, -1, -1):
            h_future_min[fi][b] = lo
            h_future_max[fi][b] = hi
            if b > 0:
                pid = b - 1
                pd = plan.parts[pid]
                pos = np.flatnonzero(pd.feat_ids == fi)
                if pos.size:
                    lo += pd.colmin[pos[0]]
                    hi += pd.colmax[pos[0]]

    terms = [ct for ct in plan.cross_terms if ct.fid in obj_set
             and model.features[ct.fid].transform != "hinge"]
    cons = plan.cross_cons

    layouts = [_Layout() for _ in range(n_parts + 1)]
    for b in range(1, n_parts):
        for ti, ct in enumerate(terms):
            if ct.first < b <= ct.last:
                layouts[b].term_bits.append(ti)
        for ci, cc in enumerate(cons):
            if cc.first < b <= cc.last:
                layouts[b].con_bits.append(ci)
                layouts[b].con_slots.append(ci)
        for fi in hinge_multi:
            parts = feat_parts[fi]
            if parts[0] < b <= parts[-1]:
                layouts[b].hinge_slots.append(fi)
    for lay in layouts:
        if len(lay.term_bits) + len(lay.con_bits) > 62:
            raise SweepUnsupported("too many open cross-part items")

    def state_width(b):
        lay = layouts[b]
        return 1 + len(lay.con_slots) + len(lay.hinge_slots)

    def transition(b, states, compute_value):
        """All transitions for part b from boundary-b states.

        states: (S, width_b) int64. Returns (next_states (S*C, width), value
        (S*C) or None, feasible mask (S*C)). Row r*C+c = state r, candidate c.
        """
        lay, nxt = layouts[b], layouts[b + 1]
        pd = plan.parts[b]
        n_c = pd.cands.shape[0]
        n_s = states.shape[0]
        if n_s * n_c > state_limit * 8:
            raise EnumerationTooLarge("sweep transition too large")
        bits = states[:, 0]
        con_prefix = {}
        off = 1
        for ci in lay.con_slots:
            con_prefix[ci] = states[:, off].astype(float) / _QUANT
            off += 1
        hinge_prefix = {}
        for fi in lay.hinge_slots:
            hinge_prefix[fi] = states[:, off]
            off += 1

        value = None
        if compute_value:
            value = np.broadcast_to(base[b][None, :], (n_s, n_c)).copy()
        feas = np.ones((n_s, n_c), dtype=bool)

        def term_truth(ti, ct):
            """Conjunction truth so far, as (S, C) after part b."""
            if ti in lay.term_bits:
                prev = (bits >> lay.term_bits.index(ti)) & 1
            else:
                prev = np.ones(n_s, dtype=np.int64)
            cur = ct.truth.get(b)
            curv = cur if cur is not None else np.ones(n_c, dtype=bool)
            return (prev[:, None] != 0) & curv[None, :]

        # consume cross terms ending here
        if compute_value:
            for ti, ct in enumerate(terms):
                if ct.last == b:
                    tt = term_truth(ti, ct)
                    value += np.where(tt, beta[ct.fid] * ct.coef, 0.0)

        # constraints ending here
        for ci, cc in enumerate(cons):
            if cc.last != b:
                continue
            if ci in lay.con_slots:
                lhs = con_prefix[ci][:, None] + cc.lhs[b][None, :] + cc.const
                prev_ok = ((bits >> (len(lay.term_bits)
                                     + lay.con_bits.index(ci))) & 1) != 0
                cond = prev_ok[:, None] & cc.cond[b][None, :]
            else:
                lhs = np.broadcast_to((cc.lhs[b] + cc.const)[None, :], (n_s, n_c))
                cond = np.broadcast_to(cc.cond[b][None, :], (n_s, n_c))
            if cc.op == "<=":
                sat = lhs <= cc.bound + EPS
            elif cc.op == ">=":
                sat = lhs >= cc.bound - EPS
            else:
                sat = np.abs(lhs - cc.bound) <= EPS
            feas &= ~cond | sat

        # next-state assembly
        width = state_width(b + 1)
        out = np.zeros((n_s, n_c, width), dtype=np.int64)
        for pos, ti in enumerate(nxt.term_bits):
            tt = term_truth(ti, terms[ti])
            out[:, :, 0] |= tt.astype(np.int64) << pos
        nbits = len(nxt.term_bits)
        for pos, ci in enumerate(nxt.con_bits):
            cc = cons[ci]
            if ci in lay.con_bits:
                prev_ok = ((bits >> (len(lay.term_bits)
                                     + lay.con_bits.index(ci))) & 1) != 0
            else:
                prev_ok = np.ones(n_s, dtype=bool)
            cur = cc.cond.get(b)
            curv = cur if cur is not None else np.ones(n_c, dtype=bool)
            ok = prev_ok[:, None] & curv[None, :]
            out[:, :, 0] |= ok.astype(np.int64) << (nbits + pos)
        off = 1
        for ci in nxt.con_slots:
            cc = cons[ci]
            prev = con_prefix.get(ci)
            prevv = prev if prev is not None else np.zeros(n_s)
            cur = cc.lhs.get(b)
            curv = cur if cur is not None else np.zeros(n_c)
            out[:, :, off] = _q(prevv[:, None] + curv[None, :])
            off += 1
        for fi in nxt.hinge_slots:
            f = model.features[fi]
            pd_pos = np.flatnonzero(pd.feat_ids == fi)
            cur = pd.contrib[:, pd_pos[0]] if pd_pos.size else np.zeros(n_c)
            prev = hinge_prefix.get(fi)
            if prev is None:
                pref = np.broadcast_to(_q(cur)[None, :], (n_s, n_c)).copy()
            else:
                sat = prev == _SAT
                dead = prev == _DEAD
                live = prev.astype(float) / _QUANT
                live[sat | dead] = 0.0
                pref = _q(live[:, None] + cur[None, :])
                if compute_value:
                    value += np.where(sat[:, None], w[fi] * cur[None, :], 0.0)
                pref = np.where(sat[:, None], _SAT, pref)
                pref = np.where(dead[:, None], _DEAD, pref)
            live_mask = (pref != _SAT) & (pref != _DEAD)
            pref_f = pref.astype(float) / _QUANT
            fmin = h_future_min[fi][b + 1]
            fmax = h_future_max[fi][b + 1]
            goes_dead = live_mask & (pref_f + fmax <= f.threshold)
            goes_sat = live_mask & (pref_f >= f.threshold) & (fmin >= 0.0)
            if compute_value:
                value += np.where(goes_sat, w[fi] * (pref_f - f.threshold), 0.0)
            pref = np.where(goes_dead, _DEAD, pref)
            pref = np.where(goes_sat, _SAT, pref)
            out[:, :, off] = pref
            off += 1

        # hinge features ending here: consume
        if compute_value:
            for fi in hinge_multi:
                if feat_parts[fi][-1] != b:
                    continue
                f = model.features[fi]
                pd_pos = np.flatnonzero(pd.feat_ids == fi)
                cur = pd.contrib[:, pd_pos[0]] if pd_pos.size else np.zeros(n_c)
                prev = hinge_prefix.get(fi)
                if prev is None:
                    value += w[fi] * np.maximum(0.0, cur[None, :] - f.threshold)
                else:
                    sat = prev == _SAT
                    dead = prev == _DEAD
                    live = prev.astype(float) / _QUANT
                    live[sat | dead] = 0.0
                    total = live[:, None] + cur[None, :]
                    hv = np.maximum(0.0, total - f.threshold)
                    hv = np.where(sat[:, None], cur[None, :], hv)
                    hv = np.where(dead[:, None], 0.0, hv)
                    value += w[fi] * hv

        return out.reshape(n_s * n_c, width), \
            (value.reshape(n_s * n_c) if compute_value else None), \
            feas.reshape(n_s * n_c)

    # forward reachability
    reach = [np.zeros((1, state_width(0)), dtype=np.int64)]
    for b in range(n_parts):
        nxt, _, feas = transition(b, reach[b], compute_value=False)
        nxt = nxt[feas]
        if nxt.shape[0] == 0:
            raise InfeasibleError("no feasible configuration (cross-part constraints)")
        keys = _rows_to_keys(nxt)
        _, idx = np.unique(keys, return_index=True)
        if idx.size > state_limit:
            raise EnumerationTooLarge("sweep state count exceeds limit")
        reach.append(nxt[np.sort(idx)])

    # backward values-to-go
    g = [None] * (n_parts + 1)
    g[n_parts] = (_rows_to_keys(reach[n_parts]),
                  np.zeros(reach[n_parts].shape[0]))
    order = np.argsort(g[n_parts][0])
    g[n_parts] = (g[n_parts][0][order], g[n_parts][1][order])
    for b in range(n_parts - 1, -1, -1):
        states = reach[b]
        n_s = states.shape[0]
        n_c = plan.parts[b].cands.shape[0]
        nxt, value, feas = transition(b, states, compute_value=True)
        keys_next, g_next = g[b + 1]
        pos = np.searchsorted(keys_next, _rows_to_keys(nxt))
        pos = np.clip(pos, 0, keys_next.size - 1)
        found = keys_next[pos] == _rows_to_keys(nxt)
        total = np.where(feas & found, value + g_next[pos], -np.inf)
        best = total.reshape(n_s, n_c).max(axis=1)
        keys_b = _rows_to_keys(states)
        order = np.argsort(keys_b)
        g[b] = (keys_b[order], best[order])

    start_key = _rows_to_keys(reach[0])
    i0 = np.searchsorted(g[0][0], start_key[0])
    vmax = const_a + g[0][1][i0]
    if not np.isfinite(vmax):
        raise InfeasibleError("no feasible configuration")

    # greedy lexicographic extraction
    state = reach[0][0]
    f_so_far = const_a
    row = np.full(model.num_vars, -1, dtype=np.int64)
    states_used = sum(r.shape[0] for r in reach)
    for b in range(n_parts):
        nxt, value, feas = transition(b, state[None, :], compute_value=True)
        keys_next, g_next = g[b + 1]
        pos = np.searchsorted(keys_next, _rows_to_keys(nxt))
        pos = np.clip(pos, 0, keys_next.size - 1)
        found = keys_next[pos] == _rows_to_keys(nxt)
        total = np.where(feas & found, f_so_far + value + g_next[pos], -np.inf)
        qual = np.flatnonzero(total >= vmax - EPS)
        if qual.size == 0:  # numerical guard: fall back to the best child
            qual = np.array([int(np.argmax(total))])
        c = int(qual[0])
        pd = plan.parts[b]
        row[list(model.parts[b].variables)] = pd.cands[c]
        f_so_far += value[c]
        state = nxt[c]

    canon = Restriction(model, tuple(range(model.num_vars)),
                        np.full(model.num_vars, -1, dtype=np.int64), obj, w)
    val = float(canon.values(row[None, :])[0])
    return row, val, states_used


def branch_and_bound_full(model: ProblemModel, w, objective):
    """Non-enumerative full inference: part sweep with dominance merging,
    falling back to variable-level branch and bound when unsupported."""
    try:
        return part_sweep_optimum(model, w, objective)
    except SweepUnsupported:
        from .inference import _bnb_over
        rest = Restriction(model, tuple(range(model.num_vars)),
                           np.full(model.num_vars, -1, dtype=np.int64),
                           sorted(objective), np.asarray(w, dtype=float))
        codes, values, idx, nodes = _bnb_over(rest)
        return codes[idx], float(values[idx]), nodes

"""Flat-array compilation of problem models for the batch kernels.

``CompiledModel`` folds every feature into per-variable lookup tables plus
residual multi-literal conjunction terms, packed into contiguous arrays.
``Restriction`` specializes an objective and the hard constraints to a
subset of free variables with the remainder fixed: fixed contributions
fold into constants, dead terms drop, and single-variable constraints
prune domains directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import EPS, InfeasibleError, ProblemModel, _folded_unary

_OP_CODE = {"<=": 0, ">=": 1, "==": 2}


class EnumerationTooLarge(RuntimeError):
    """Candidate product exceeds the exhaustive-enumeration cap."""


@dataclass(frozen=True)
class FeatureArrays:
    f_const: np.ndarray
    trans: np.ndarray
    thresh: np.ndarray
    u_feat: np.ndarray
    u_var: np.ndarray
    u_off: np.ndarray
    u_tab: np.ndarray
    t_feat: np.ndarray
    t_coef: np.ndarray
    t_off: np.ndarray
    l_var: np.ndarray
    l_code: np.ndarray
    l_neg: np.ndarray

    def phi(self, codes: np.ndarray) -> np.ndarray:
        return kernels.phi_batch(
            codes, self.f_const, self.trans, self.thresh,
            self.u_feat, self.u_var, self.u_off, self.u_tab,
            self.t_feat, self.t_coef, self.t_off,
            self.l_var, self.l_code, self.l_neg)


@dataclass(frozen=True)
class ConstraintArrays:
    names: tuple[str, ...]
    c_const: np.ndarray
    c_op: np.ndarray
    c_bound: np.ndarray
    cc_off: np.ndarray
    cc_var: np.ndarray
    cc_code: np.ndarray
    cc_neg: np.ndarray
    ce_off: np.ndarray
    ce_var: np.ndarray
    ce_toff: np.ndarray
    ce_tab: np.ndarray

    def feasible(self, codes: np.ndarray) -> np.ndarray:
        if not self.names:
            return np.ones(codes.shape[0], dtype=bool)
        return kernels.feasible_batch(
            codes, self.c_const, self.c_op, self.c_bound,
            self.cc_off, self.cc_var, self.cc_code, self.cc_neg,
            self.ce_off, self.ce_var, self.ce_toff, self.ce_tab)

    def satisfied_matrix(self, codes: np.ndarray) -> np.ndarray:
        """(rows, constraints) boolean matrix, numpy reference path."""
        n = codes.shape[0]
        out = np.ones((n, len(self.names)), dtype=bool)
        for c in range(len(self.names)):
            active = np.ones(n, dtype=bool)
            for li in range(self.cc_off[c], self.cc_off[c + 1]):
                hit = codes[:, self.cc_var[li]] == self.cc_code[li]
                if self.cc_neg[li]:
                    hit = ~hit
                active &= hit
            lhs = np.full(n, self.c_const[c])
            for k in range(self.ce_off[c], self.ce_off[c + 1]):
                lhs += self.ce_tab[self.ce_toff[k] + codes[:, self.ce_var[k]]]
            if self.c_op[c] == 0:
                sat = lhs <= self.c_bound[c] + EPS
            elif self.c_op[c] == 1:
                sat = lhs >= self.c_bound[c] - EPS
            else:
                sat = np.abs(lhs - self.c_bound[c]) <= EPS
            out[:, c] = ~active | sat
        return out


def _pack_features(structs) -> FeatureArrays:
    """structs: iterable of (const, trans_code, thresh, unary, terms) where
    unary = [(var, table array)] and terms = [(coef, [(var, code, neg)])]."""
    f_const, trans, thresh = [], [], []
    u_feat, u_var, u_off, u_tabs = [], [], [], []
    t_feat, t_coef, t_off = [], [], [0]
    l_var, l_code, l_neg = [], [], []
    tab_cursor = 0
    for fi, (const, tr, th, unary, terms) in enumerate(structs):
        f_const.append(const)
        trans.append(tr)
        thresh.append(th)
        for var, table in unary:
            u_feat.append(fi)
            u_var.append(var)
            u_off.append(tab_cursor)
            u_tabs.append(np.asarray(table, dtype=float))
            tab_cursor += len(table)
        for coef, lits in terms:
            t_feat.append(fi)
            t_coef.append(coef)
            for var, code, neg in lits:
                l_var.append(var)
                l_code.append(code)
                l_neg.append(1 if neg else 0)
            t_off.append(len(l_var))
    return FeatureArrays(
        f_const=np.asarray(f_const, dtype=float),
        trans=np.asarray(trans, dtype=np.int64),
        thresh=np.asarray(thresh, dtype=float),
        u_feat=np.asarray(u_feat, dtype=np.int64),
        u_var=np.asarray(u_var, dtype=np.int64),
        u_off=np.asarray(u_off, dtype=np.int64),
        u_tab=(np.concatenate(u_tabs) if u_tabs else np.zeros(0)),
        t_feat=np.asarray(t_feat, dtype=np.int64),
        t_coef=np.asarray(t_coef, dtype=float),
        t_off=np.asarray(t_off, dtype=np.int64),
        l_var=np.asarray(l_var, dtype=np.int64),
        l_code=np.asarray(l_code, dtype=np.int64),
        l_neg=np.asarray(l_neg, dtype=np.int64),
    )


def _pack_constraints(structs) -> ConstraintArrays:
    """structs: iterable of (name, const, op_code, bound, cond, entries) where
    cond = [(var, code, neg)] and entries = [(var, table array)]."""
    names, c_const, c_op, c_bound = [], [], [], []
    cc_off, cc_var, cc_code, cc_neg = [0], [], [], []
    ce_off, ce_var, ce_toff, ce_tabs = [0], [], [], []
    tab_cursor = 0
    for name, const, op, bound, cond, entries in structs:
        names.append(name)
        c_const.append(const)
        c_op.append(op)
        c_bound.append(bound)
        for var, code, neg in cond:
            cc_var.append(var)
            cc_code.append(code)
            cc_neg.append(1 if neg else 0)
        cc_off.append(len(cc_var))
        for var, table in entries:
            ce_var.append(var)
            ce_toff.append(tab_cursor)
            ce_tabs.append(np.asarray(table, dtype=float))
            tab_cursor += len(table)
        ce_off.append(len(ce_var))
    return ConstraintArrays(
        names=tuple(names),
        c_const=np.asarray(c_const, dtype=float),
        c_op=np.asarray(c_op, dtype=np.int64),
        c_bound=np.asarray(c_bound, dtype=float),
        cc_off=np.asarray(cc_off, dtype=np.int64),
        cc_var=np.asarray(cc_var, dtype=np.int64),
        cc_code=np.asarray(cc_code, dtype=np.int64),
        cc_neg=np.asarray(cc_neg, dtype=np.int64),
        ce_off=np.asarray(ce_off, dtype=np.int64),
        ce_var=np.asarray(ce_var, dtype=np.int64),
        ce_toff=np.asarray(ce_toff, dtype=np.int64),
        ce_tab=(np.concatenate(ce_tabs) if ce_tabs else np.zeros(0)),
    )


class CompiledModel:
    """Folded, array-packed twin of a ProblemModel."""

    def __init__(self, model: ProblemModel):
        self.model = model
        domains = model.domains
        self.dom_values = [np.asarray(d, dtype=np.int64) for d in domains]
        self.dom_sizes = np.array([len(d) for d in domains], dtype=np.int64)

        # folded form per feature, kept for restriction
        self.folded_unary: list[list[tuple[int, np.ndarray]]] = []
        self.folded_terms: list[list[tuple[float, list[tuple[int, int, bool]]]]] = []
        structs = []
        for f in model.features:
            tables, coupled = _folded_unary(f, domains)
            unary = [(v, tables[v]) for v in sorted(tables)]
            terms = []
            for t in coupled:
                lits = [(lit.var, domains[lit.var].index(lit.value), lit.negate)
                        for lit in t.literals]
                terms.append((t.coef, lits))
            self.folded_unary.append(unary)
            self.folded_terms.append(terms)
            tr = {"identity": 0, "signed": 1, "hinge": 2}[f.transform]
            structs.append((0.0, tr, f.threshold, unary, terms))
        self.features = _pack_features(structs)

        cons = []
        self.constraint_structs = []
        for c in model.hard_constraints:
            cond = [(lit.var, domains[lit.var].index(lit.value), lit.negate)
                    for lit in c.condition]
            entries = [(t.var, np.asarray(t.table, dtype=float)) for t in c.tables]
            struct = (c.name, 0.0, _OP_CODE[c.op], c.bound, cond, entries)
            cons.append(struct)
            self.constraint_structs.append(struct)
        self.constraints = _pack_constraints(cons)

    @staticmethod
    def build(model: ProblemModel) -> "CompiledModel":
        return CompiledModel(model)

    # -- code conversion ----------------------------------------------------

    def encode(self, values) -> np.ndarray:
        model = self.model
        return np.array([model.code_of(v, val) for v, val in enumerate(values)],
                        dtype=np.int64)

    def decode(self, codes: np.ndarray) -> tuple[int, ...]:
        return tuple(int(self.dom_values[v][codes[v]])
                     for v in range(len(self.dom_values)))

    # -- batch evaluation ----------------------------------------------------

    def phi(self, codes: np.ndarray) -> np.ndarray:
        return self.features.phi(np.ascontiguousarray(codes, dtype=np.int64))

    def phi_row(self, codes: np.ndarray) -> np.ndarray:
        return self.phi(codes[None, :])[0]

    def feasible(self, codes: np.ndarray) -> np.ndarray:
        return self.constraints.feasible(np.ascontiguousarray(codes, dtype=np.int64))


class Restriction:
    """Objective and constraints specialized to free variables.

    ``values`` returns absolute partial utilities (fully fixed objective
    features contribute through a constant offset), so callers can compare
    results across different candidate sets for the same remainder.
    """

    def __init__(self, model: ProblemModel, free, fixed_codes, objective, w,
                 future=None):
        cm = model.compiled
        self.model = model
        self.free = np.asarray(free, dtype=np.int64)
        self.fixed_codes = fixed_codes
        self.objective = tuple(objective)
        local = {int(g): i for i, g in enumerate(self.free)}

        offset = 0.0
        structs = []
        kept = []
        w_sub = []
        self.undetermined: list[int] = []
        for fi in self.objective:
            feat = model.features[fi]
            if future is not None and any(future[v] for v in feat.scope):
                self.undetermined.append(fi)
                continue
            const = 0.0
            unary = []
            terms = []
            for var, table in cm.folded_unary[fi]:
                if var in local:
                    unary.append((local[var], table))
                else:
                    const += table[fixed_codes[var]]
            for coef, lits in cm.folded_terms[fi]:
                dead = False
                fl = []
                for var, code, neg in lits:
                    if var in local:
                        fl.append((local[var], code, neg))
                    elif (fixed_codes[var] == code) == neg:
                        dead = True
                        break
                if dead:
                    continue
                if fl:
                    terms.append((coef, fl))
                else:
                    const += coef
            if unary or terms:
                tr = {"identity": 0, "signed": 1, "hinge": 2}[feat.transform]
                structs.append((const, tr, feat.threshold, unary, terms))
                kept.append(fi)
                w_sub.append(w[fi])
            else:
                offset += w[fi] * _transform_scalar(feat, const)
        self.kept = kept
        self.w_sub = np.asarray(w_sub, dtype=float)
        self.offset = float(offset)
        self.structs = structs
        self.fa = _pack_features(structs)

        # constraints: restrict those touching free variables; single-variable
        # unconditional restrictions prune domains up front.
        allowed = [np.arange(cm.dom_sizes[v], dtype=np.int64) for v in self.free]
        cons = []
        self._prune_empty: list[str] = []
        for name, const0, op, bound, cond, entries in cm.constraint_structs:
            cvars = {v for v, _c, _n in cond} | {v for v, _t in entries}
            if not any(v in local for v in cvars):
                continue
            if future is not None and any(future[v] for v in cvars):
                continue
            vacuous = False
            rcond = []
            for var, code, neg in cond:
                if var in local:
                    rcond.append((local[var], code, neg))
                elif (fixed_codes[var] == code) == neg:
                    vacuous = True
                    break
            if vacuous:
                continue
            const = const0
            rentries = []
            for var, table in entries:
                if var in local:
                    rentries.append((local[var], table))
                else:
                    const += table[fixed_codes[var]]
            if not rcond and len(rentries) == 1:
                lvar, table = rentries[0]
                lhs = const + table
                if op == 0:
                    ok = lhs <= bound + EPS
                elif op == 1:
                    ok = lhs >= bound - EPS
                else:
                    ok = np.abs(lhs - bound) <= EPS
                allowed[lvar] = allowed[lvar][ok[allowed[lvar]]]
                if allowed[lvar].size == 0:
                    self._prune_empty.append(name)
            else:
                cons.append((name, const, op, bound, rcond, rentries))
        self.ca = _pack_constraints(cons)
        self.allowed = allowed
        if self._prune_empty:
            raise InfeasibleError(
                "no feasible completion: domain emptied by "
                + ", ".join(self._prune_empty),
                violated=self._prune_empty)

    def values(self, codes: np.ndarray) -> np.ndarray:
        """Absolute objective utility per candidate row."""
        if not self.kept:
            return np.full(codes.shape[0], self.offset)
        phi = self.fa.phi(np.ascontiguousarray(codes, dtype=np.int64))
        return (phi * self.w_sub).sum(axis=1) + self.offset

    def feasible(self, codes: np.ndarray) -> np.ndarray:
        return self.ca.feasible(np.ascontiguousarray(codes, dtype=np.int64))

    def enumerate(self, limit: int = 1 << 21) -> np.ndarray:
        """All candidate code rows (lexicographic), after domain pruning."""
        total = 1
        for a in self.allowed:
            total *= a.size
            if total > limit:
                raise EnumerationTooLarge(
                    f"candidate product exceeds {limit} rows")
        grids = np.meshgrid(*self.allowed, indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def complete(self, codes: np.ndarray) -> np.ndarray:
        """Full-model code rows with the fixed remainder filled in."""
        full = np.tile(self.fixed_codes, (codes.shape[0], 1))
        full[:, self.free] = codes
        return full

    def violation_report(self, codes: np.ndarray) -> list[str]:
        """Constraint names explaining why no candidate is feasible."""
        names = list(self._prune_empty)
        if codes.shape[0] and self.ca.names:
            sat = self.ca.satisfied_matrix(
                np.ascontiguousarray(codes, dtype=np.int64))
            always = ~sat.any(axis=0)
            ever = ~sat.all(axis=0)
            chosen = always if always.any() else ever
            names += [self.ca.names[i] for i in np.flatnonzero(chosen)]
        return names


def _transform_scalar(feature, e: float) -> float:
    if feature.transform == "identity":
        return e
    if feature.transform == "signed":
        return 2.0 * e - 1.0
    return max(0.0, e - feature.threshold)

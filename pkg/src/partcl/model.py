"""Domain model for constructive configuration problems.

A problem is a set of integer-coded variables with finite domains, hard
constraints delimiting the feasible set, a list of numeric features, and a
decomposition of the variables into disjoint basic parts. Utilities are
linear in the features; partial utilities restrict the sum to an index set.

Feature expressions are sums of indicator-conjunction terms and linear
terms, passed through one of three transforms (identity, signed indicator,
hinge). This small language is enough to express every shipped benchmark
while staying amenable to exact bound propagation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

#: Tolerance used everywhere two utilities are compared.
EPS = 1e-9

TRANSFORMS = ("identity", "signed", "hinge")

#: Combination cap for exact range enumeration of coupled terms; above it
#: the range falls back to conservative per-term intervals.
_RANGE_ENUM_CAP = 4096


class ModelError(ValueError):
    """Raised when a model definition violates a structural invariant.

    ``path`` addresses the offending element, e.g. ``features[3].terms[0]``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ConflictError(ValueError):
    """Raised when combining partial configurations that disagree."""


class InfeasibleError(RuntimeError):
    """Raised when an operation requires a feasible completion and none exists."""

    def __init__(self, message: str, violated: Sequence[str] = ()):
        self.violated = list(violated)
        super().__init__(message)


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[int, ...]  # ascending, duplicate-free


@dataclass(frozen=True)
class Literal:
    """var == value, or var != value when negated."""

    var: int
    value: int
    negate: bool = False

    def holds(self, values: Sequence[int]) -> bool:
        return (values[self.var] == self.value) != self.negate


@dataclass(frozen=True)
class Term:
    """coef * [conjunction of literals]."""

    coef: float
    literals: tuple[Literal, ...]


@dataclass(frozen=True)
class LinearTerm:
    """coef * raw value of a variable."""

    coef: float
    var: int


@dataclass(frozen=True)
class FeatureDef:
    index: int
    name: str
    terms: tuple[Term, ...] = ()
    linear: tuple[LinearTerm, ...] = ()
    transform: str = "identity"
    threshold: float = 0.0

    @property
    def scope(self) -> frozenset[int]:
        read = {lit.var for t in self.terms for lit in t.literals}
        read.update(lt.var for lt in self.linear)
        return frozenset(read)

    def raw(self, values: Sequence[int], exact: bool = False):
        """Pre-transform expression value; Fractions when ``exact``."""
        conv: Callable = Fraction if exact else float
        acc = conv(0)
        for t in self.terms:
            if all(lit.holds(values) for lit in t.literals):
                acc += conv(t.coef)
        for lt in self.linear:
            acc += conv(lt.coef) * values[lt.var]
        return acc

    def value(self, values: Sequence[int], exact: bool = False):
        e = self.raw(values, exact)
        if self.transform == "identity":
            return e
        if self.transform == "signed":
            return 2 * e - 1
        # hinge
        thr = Fraction(self.threshold) if exact else self.threshold
        shifted = e - thr
        zero = Fraction(0) if exact else 0.0
        return shifted if shifted > 0 else zero


@dataclass(frozen=True)
class TableTerm:
    """Per-value lookup contribution: table[code of var's value]."""

    var: int
    table: tuple[float, ...]  # aligned with the variable's domain

    @staticmethod
    def from_mapping(var: int, domain: Sequence[int],
                     mapping: Mapping[int, float],
                     default: float = 0.0) -> "TableTerm":
        return TableTerm(var, tuple(float(mapping.get(v, default)) for v in domain))


_OPS = {
    "<=": lambda lhs, bound: lhs <= bound + EPS,
    ">=": lambda lhs, bound: lhs >= bound - EPS,
    "==": lambda lhs, bound: abs(lhs - bound) <= EPS,
}


@dataclass(frozen=True)
class Constraint:
    """condition (conjunction of literals) implies [sum of tables op bound]."""

    name: str
    tables: tuple[TableTerm, ...]
    op: str
    bound: float
    condition: tuple[Literal, ...] = ()

    @property
    def scope(self) -> frozenset[int]:
        read = {lit.var for lit in self.condition}
        read.update(t.var for t in self.tables)
        return frozenset(read)

    def holds(self, model: "ProblemModel", values: Sequence[int]) -> bool:
        if not all(lit.holds(values) for lit in self.condition):
            return True
        lhs = 0.0
        for t in self.tables:
            lhs += t.table[model.code_of(t.var, values[t.var])]
        return _OPS[self.op](lhs, self.bound)


@dataclass(frozen=True)
class BasicPart:
    index: int
    name: str
    variables: tuple[int, ...]  # ascending
    features: frozenset[int] = frozenset()  # I_p, derived at model build


@dataclass(frozen=True)
class Configuration:
    values: tuple[int, ...]


@dataclass(frozen=True)
class PartialConfiguration:
    parts: frozenset[int]
    variables: tuple[int, ...]  # ascending model variable indices
    values: tuple[int, ...]

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.variables, self.values))


def combine(a: PartialConfiguration, b: PartialConfiguration) -> PartialConfiguration:
    """Merge two partial configurations; shared variables must agree."""
    bd = b.as_dict()
    merged = a.as_dict()
    for v, val in bd.items():
        if v in merged and merged[v] != val:
            raise ConflictError(
                f"conflicting assignment for variable {v}: {merged[v]} vs {val}")
        merged[v] = val
    variables = tuple(sorted(merged))
    return PartialConfiguration(
        parts=a.parts | b.parts,
        variables=variables,
        values=tuple(merged[v] for v in variables),
    )


# ---------------------------------------------------------------------------
# Range propagation


def _folded_unary(feature: FeatureDef, domains: Sequence[tuple[int, ...]],
                  ) -> tuple[dict[int, np.ndarray], list[Term]]:
    """Split a feature into per-variable lookup tables and coupled terms.

    Single-literal terms and linear terms fold into a table per variable;
    terms with two or more literals remain as coupled conjunctions.
    """
    tables: dict[int, np.ndarray] = {}

    def tab(var: int) -> np.ndarray:
        if var not in tables:
            tables[var] = np.zeros(len(domains[var]))
        return tables[var]

    coupled: list[Term] = []
    for t in feature.terms:
        if len(t.literals) == 1:
            lit = t.literals[0]
            dom = domains[lit.var]
            code = dom.index(lit.value)
            tt = tab(lit.var)
            if lit.negate:
                tt += t.coef
                tt[code] -= t.coef
            else:
                tt[code] += t.coef
        else:
            coupled.append(t)
    for lt in feature.linear:
        tt = tab(lt.var)
        tt += lt.coef * np.asarray(domains[lt.var], dtype=float)
    return tables, coupled


def _literal_status(lit: Literal, avail: Sequence[int]) -> str:
    """'true' / 'false' / 'open' over a set of still-available values."""
    sat = [(v == lit.value) != lit.negate for v in avail]
    if all(sat):
        return "true"
    if not any(sat):
        return "false"
    return "open"


def _cluster_range(terms: list[Term],
                   tables: dict[int, np.ndarray],
                   domains: Sequence[tuple[int, ...]],
                   available: Mapping[int, Sequence[int]],
                   cluster_vars: list[int]) -> tuple[float, float]:
    """Range of a set of coupled terms (plus any tables on their variables).

    Enumerates, per variable, equivalence classes of values that agree on
    every literal touching that variable; exact for pure conjunctions.
    Falls back to per-term intervals when the class product is too large.
    """
    var_lits: dict[int, list[tuple[int, Literal]]] = {v: [] for v in cluster_vars}
    for ti, t in enumerate(terms):
        for lit in t.literals:
            if lit.var in var_lits:
                var_lits[lit.var].append((ti, lit))

    classes: list[list[tuple[tuple[bool, ...], float, float]]] = []
    total = 1
    for v in cluster_vars:
        by_key: dict[tuple[bool, ...], list[int]] = {}
        for val in available[v]:
            key = tuple((val == lit.value) != lit.negate for _, lit in var_lits[v])
            by_key.setdefault(key, []).append(val)
        cls = []
        dom = domains[v]
        for key, vals in by_key.items():
            if v in tables:
                tv = [tables[v][dom.index(val)] for val in vals]
                cls.append((key, min(tv), max(tv)))
            else:
                cls.append((key, 0.0, 0.0))
        classes.append(cls)
        total *= len(cls)

    if total > _RANGE_ENUM_CAP:
        lo = hi = 0.0
        for t in terms:
            statuses = [_literal_status(lit, available[lit.var]) for lit in t.literals]
            if any(s == "false" for s in statuses):
                continue
            if all(s == "true" for s in statuses):
                lo += t.coef
                hi += t.coef
            else:
                lo += min(0.0, t.coef)
                hi += max(0.0, t.coef)
        for v in cluster_vars:
            if v in tables:
                tv = [tables[v][domains[v].index(val)] for val in available[v]]
                lo += min(tv)
                hi += max(tv)
        return lo, hi

    # For each combo of classes, a term holds iff all its literal outcomes hold.
    lo = np.inf
    hi = -np.inf
    for combo in itertools.product(*classes):
        acc_lo = acc_hi = 0.0
        term_ok = [True] * len(terms)
        for pos, v in enumerate(cluster_vars):
            outs = combo[pos][0]
            for (ti, _lit), ok in zip(var_lits[v], outs):
                if not ok:
                    term_ok[ti] = False
        for ti, t in enumerate(terms):
            if term_ok[ti]:
                acc_lo += t.coef
                acc_hi += t.coef
        for pos in range(len(cluster_vars)):
            acc_lo += combo[pos][1]
            acc_hi += combo[pos][2]
        lo = min(lo, acc_lo)
        hi = max(hi, acc_hi)
    return float(lo), float(hi)


def feature_expression_range(feature: FeatureDef,
                             domains: Sequence[tuple[int, ...]],
                             available: Mapping[int, Sequence[int]] | None = None,
                             ) -> tuple[float, float]:
    """Pre-transform range of a feature over the available value sets."""
    if available is None:
        available = {v: domains[v] for v in feature.scope}
    tables, coupled = _folded_unary(feature, domains)

    # union-find over variables coupled through multi-literal terms
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for t in coupled:
        vs = [lit.var for lit in t.literals]
        for v in vs[1:]:
            union(vs[0], v)

    cluster_of: dict[int, list[Term]] = {}
    cluster_vars: dict[int, set[int]] = {}
    for t in coupled:
        root = find(t.literals[0].var)
        cluster_of.setdefault(root, []).append(t)
        cluster_vars.setdefault(root, set()).update(lit.var for lit in t.literals)

    lo = hi = 0.0
    clustered_vars: set[int] = set()
    for root in sorted(cluster_of):
        vs = sorted(cluster_vars[root])
        clustered_vars.update(vs)
        c_lo, c_hi = _cluster_range(cluster_of[root],
                                    {v: tables[v] for v in vs if v in tables},
                                    domains, available, vs)
        lo += c_lo
        hi += c_hi
    for v in sorted(tables):
        if v in clustered_vars:
            continue
        dom = domains[v]
        vals = [tables[v][dom.index(val)] for val in available[v]]
        lo += min(vals)
        hi += max(vals)
    return lo, hi


def feature_value_range(feature: FeatureDef,
                        domains: Sequence[tuple[int, ...]],
                        available: Mapping[int, Sequence[int]] | None = None,
                        ) -> tuple[float, float]:
    """Post-transform range of a feature over the available value sets."""
    lo, hi = feature_expression_range(feature, domains, available)
    if feature.transform == "identity":
        return lo, hi
    if feature.transform == "signed":
        return 2 * lo - 1, 2 * hi - 1
    return max(0.0, lo - feature.threshold), max(0.0, hi - feature.threshold)


# ---------------------------------------------------------------------------
# Problem model


@dataclass(frozen=True)
class ProblemModel:
    """Immutable problem definition; safe to share across threads."""

    variables: tuple[Variable, ...]
    hard_constraints: tuple[Constraint, ...]
    features: tuple[FeatureDef, ...]
    parts: tuple[BasicPart, ...]
    feature_bound: float        # D: max-norm bound on any feature value
    part_feature_bound: int     # S: max over parts of |I_p|
    feature_ranges: tuple[tuple[float, float], ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_features(self) -> int:
        return len(self.features)

    @property
    def num_parts(self) -> int:
        return len(self.parts)

    def code_of(self, var: int, value: int) -> int:
        try:
            return self._domain_index[var][value]
        except KeyError:
            raise ModelError(f"variables[{var}]",
                             f"value {value} not in domain") from None

    @property
    def _domain_index(self) -> tuple[dict[int, int], ...]:
        cached = getattr(self, "_domain_index_cache", None)
        if cached is None:
            cached = tuple({v: i for i, v in enumerate(var.domain)}
                           for var in self.variables)
            object.__setattr__(self, "_domain_index_cache", cached)
        return cached

    @property
    def domains(self) -> tuple[tuple[int, ...], ...]:
        return tuple(var.domain for var in self.variables)

    @property
    def compiled(self):
        cached = getattr(self, "_compiled_cache", None)
        if cached is None:
            from .compile import CompiledModel
            cached = CompiledModel.build(self)
            object.__setattr__(self, "_compiled_cache", cached)
        return cached

    # -- part algebra ------------------------------------------------------

    def part_by_name(self, name: str) -> BasicPart:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    def feature_by_name(self, name: str) -> FeatureDef:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def var_index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise KeyError(name)

    def restrict(self, x: Configuration, part_ids: Iterable[int]) -> PartialConfiguration:
        """Partial configuration of ``x`` over a union of basic parts."""
        ids = frozenset(part_ids)
        variables = tuple(sorted(v for pid in ids for v in self.parts[pid].variables))
        return PartialConfiguration(ids, variables,
                                    tuple(x.values[v] for v in variables))

    def complement(self, x: Configuration, part_id: int) -> PartialConfiguration:
        others = frozenset(range(self.num_parts)) - {part_id}
        return self.restrict(x, others)

    def total(self, partial: PartialConfiguration) -> Configuration:
        if partial.variables != tuple(range(self.num_vars)):
            missing = sorted(set(range(self.num_vars)) - set(partial.variables))
            raise ConflictError(f"partial configuration misses variables {missing}")
        return Configuration(partial.values)

    # -- evaluation --------------------------------------------------------

    def check_values(self, values: Sequence[int]) -> None:
        if len(values) != self.num_vars:
            raise ModelError("configuration",
                             f"expected {self.num_vars} values, got {len(values)}")
        for i, v in enumerate(values):
            if v not in self._domain_index[i]:
                raise ModelError(f"configuration[{i}]",
                                 f"value {v} not in domain of {self.variables[i].name}")

    def feature_vector(self, x: Configuration, exact: bool = False):
        """phi(x): reference term-walk evaluation (also the exact oracle)."""
        self.check_values(x.values)
        if exact:
            return tuple(f.value(x.values, exact=True) for f in self.features)
        return np.array([f.value(x.values) for f in self.features])

    def partial_utility(self, w, index_set: Iterable[int], x: Configuration):
        """Sum of w_i * phi_i(x) over the index set."""
        idx = sorted(index_set)
        if idx and (idx[0] < 0 or idx[-1] >= self.num_features):
            raise ModelError("index_set", f"feature index out of range: {idx}")
        values = x.values
        self.check_values(values)
        exact = bool(idx) and isinstance(w[idx[0]], Fraction)
        acc = Fraction(0) if exact else 0.0
        for i in idx:
            acc += w[i] * self.features[i].value(values, exact=exact)
        return acc

    def utility(self, w, x: Configuration):
        return self.partial_utility(w, range(self.num_features), x)

    def check_feasible(self, x: Configuration) -> tuple[bool, list[str]]:
        """True iff all hard constraints hold; else the violated names."""
        self.check_values(x.values)
        violated = [c.name for c in self.hard_constraints
                    if not c.holds(self, x.values)]
        return (not violated), violated

    # -- construction ------------------------------------------------------

    @staticmethod
    def build(variables: Sequence[Variable],
              features: Sequence[FeatureDef],
              parts: Sequence[BasicPart],
              constraints: Sequence[Constraint] = (),
              metadata: Mapping | None = None) -> "ProblemModel":
        _validate_structure(variables, features, parts, constraints)
        domains = tuple(v.domain for v in variables)

        ranges = []
        for f in features:
            lo, hi = feature_expression_range(f, domains)
            if f.transform == "signed" and not (lo >= -EPS and hi <= 1 + EPS):
                raise ModelError(f"features[{f.index}]",
                                 f"signed transform needs a 0/1 expression, range is [{lo}, {hi}]")
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ModelError(f"features[{f.index}]", "unbounded expression")
            ranges.append(feature_value_range(f, domains))
        bound = max((max(abs(lo), abs(hi)) for lo, hi in ranges), default=0.0)

        # derive I_p and check the exclusive-feature invariant
        derived_parts = []
        for p in parts:
            pv = set(p.variables)
            owned = frozenset(f.index for f in features if f.scope & pv)
            derived_parts.append(BasicPart(p.index, p.name, p.variables, owned))
        for p in derived_parts:
            others = set()
            for q in derived_parts:
                if q.index != p.index:
                    others |= q.features
            if not (p.features - others):
                raise ModelError(f"parts[{p.index}]",
                                 "part owns no exclusive feature")
        covered = set().union(*(p.features for p in derived_parts)) if derived_parts else set()
        if covered != set(range(len(features))):
            raise ModelError("parts", "union of part feature subsets must cover all features")

        s_bound = max((len(p.features) for p in derived_parts), default=0)
        return ProblemModel(
            variables=tuple(variables),
            hard_constraints=tuple(constraints),
            features=tuple(features),
            parts=tuple(derived_parts),
            feature_bound=float(bound),
            part_feature_bound=int(s_bound),
            feature_ranges=tuple(ranges),
            metadata=dict(metadata or {}),
        )


def _validate_structure(variables, features, parts, constraints) -> None:
    names = set()
    for i, v in enumerate(variables):
        if v.name in names:
            raise ModelError(f"variables[{i}]", f"duplicate name {v.name!r}")
        names.add(v.name)
        if not v.domain:
            raise ModelError(f"variables[{i}]", "empty domain")
        if list(v.domain) != sorted(set(v.domain)):
            raise ModelError(f"variables[{i}]",
                             "domain must be ascending and duplicate-free")

    def check_literal(path: str, lit: Literal) -> None:
        if not (0 <= lit.var < len(variables)):
            raise ModelError(path, f"unknown variable index {lit.var}")
        if lit.value not in variables[lit.var].domain:
            raise ModelError(path, f"value {lit.value} not in domain of "
                                   f"{variables[lit.var].name!r}")

    for i, f in enumerate(features):
        if f.index != i:
            raise ModelError(f"features[{i}]", f"index mismatch ({f.index})")
        if f.transform not in TRANSFORMS:
            raise ModelError(f"features[{i}]", f"unknown transform {f.transform!r}")
        if not f.terms and not f.linear:
            raise ModelError(f"features[{i}]", "feature reads no variables")
        for j, t in enumerate(f.terms):
            if not t.literals:
                raise ModelError(f"features[{i}].terms[{j}]", "empty conjunction")
            for k, lit in enumerate(t.literals):
                check_literal(f"features[{i}].terms[{j}].literals[{k}]", lit)
        for j, lt in enumerate(f.linear):
            if not (0 <= lt.var < len(variables)):
                raise ModelError(f"features[{i}].linear[{j}]",
                                 f"unknown variable index {lt.var}")

    seen_vars: set[int] = set()
    for i, p in enumerate(parts):
        if p.index != i:
            raise ModelError(f"parts[{i}]", f"index mismatch ({p.index})")
        if not p.variables:
            raise ModelError(f"parts[{i}]", "part owns no variables")
        if list(p.variables) != sorted(set(p.variables)):
            raise ModelError(f"parts[{i}]", "variables must be ascending and unique")
        for v in p.variables:
            if not (0 <= v < len(variables)):
                raise ModelError(f"parts[{i}]", f"unknown variable index {v}")
            if v in seen_vars:
                raise ModelError(f"parts[{i}]",
                                 f"variable {variables[v].name!r} in two parts")
            seen_vars.add(v)
    if seen_vars != set(range(len(variables))):
        missing = sorted(set(range(len(variables))) - seen_vars)
        raise ModelError("parts", f"variables not covered by any part: {missing}")

    cnames = set()
    for i, c in enumerate(constraints):
        if c.name in cnames:
            raise ModelError(f"constraints[{i}]", f"duplicate name {c.name!r}")
        cnames.add(c.name)
        if c.op not in _OPS:
            raise ModelError(f"constraints[{i}]", f"unknown op {c.op!r}")
        for k, lit in enumerate(c.condition):
            check_literal(f"constraints[{i}].condition[{k}]", lit)
        for j, t in enumerate(c.tables):
            if not (0 <= t.var < len(variables)):
                raise ModelError(f"constraints[{i}].tables[{j}]",
                                 f"unknown variable index {t.var}")
            if len(t.table) != len(variables[t.var].domain):
                raise ModelError(f"constraints[{i}].tables[{j}]",
                                 "table length must match the variable domain")

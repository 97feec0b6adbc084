"""Randomized small instances for property and oracle tests.

Instances are kept deliberately tiny so brute-force enumeration stays
cheap. Every generated model satisfies the loader invariants (parts
partition the variables, each part owns an exclusive feature, features are
bounded), and the all-zeros assignment is always feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import (BasicPart, Constraint, FeatureDef, Literal, ProblemModel,
                     TableTerm, Term, Variable)


@dataclass(frozen=True)
class InstanceSizes:
    max_parts: int = 3
    max_vars_per_part: int = 2
    max_domain: int = 3
    max_shared_features: int = 2
    constraint_rate: float = 0.5
    #: probability of adding an aggregate hinge feature spanning all parts
    #: (exercises the sweep optimizer's prefix clamping)
    cross_hinge_rate: float = 0.0


def random_small_instance(seed: int, sizes: InstanceSizes | None = None,
                          ) -> ProblemModel:
    sz = sizes or InstanceSizes()
    rng = np.random.default_rng(seed)

    n_parts = int(rng.integers(2, sz.max_parts + 1))
    variables = []
    parts = []
    for p in range(n_parts):
        nv = int(rng.integers(1, sz.max_vars_per_part + 1))
        ids = []
        for i in range(nv):
            dom = tuple(range(int(rng.integers(2, sz.max_domain + 1))))
            ids.append(len(variables))
            variables.append(Variable(name=f"v{len(variables)}", domain=dom))
        parts.append(BasicPart(index=p, name=f"p{p}", variables=tuple(ids)))

    features = []

    def add(name, terms=(), linear=(), transform="identity", threshold=0.0):
        features.append(FeatureDef(index=len(features), name=name,
                                   terms=tuple(terms), linear=tuple(linear),
                                   transform=transform, threshold=threshold))

    def rand_literal(var):
        dom = variables[var].domain
        return Literal(var, int(rng.choice(dom)), negate=bool(rng.integers(2)))

    # at least one exclusive feature per part
    for p in parts:
        kind = int(rng.integers(3))
        v = int(rng.choice(p.variables))
        if kind == 0:
            coefs = rng.integers(-2, 3, size=len(variables[v].domain))
            if not coefs.any():
                coefs[0] = 1
            add(f"excl_{p.name}",
                terms=[Term(float(c), (Literal(v, val),))
                       for val, c in zip(variables[v].domain, coefs) if c])
        elif kind == 1:
            add(f"excl_{p.name}", terms=[Term(1.0, (rand_literal(v),))],
                transform="signed")
        else:
            add(f"excl_{p.name}",
                terms=[Term(float(rng.integers(1, 3)), (Literal(v, val),))
                       for val in variables[v].domain],
                transform="hinge", threshold=float(rng.integers(0, 3)))

    # shared features between consecutive parts
    for p in range(n_parts - 1):
        for _ in range(int(rng.integers(1, sz.max_shared_features + 1))):
            a = int(rng.choice(parts[p].variables))
            b = int(rng.choice(parts[p + 1].variables))
            if rng.integers(2):
                add(f"shared_{p}_{len(features)}",
                    terms=[Term(1.0, (rand_literal(a), rand_literal(b)))],
                    transform="signed")
            else:
                coef = float(rng.integers(-2, 3)) or 1.0
                add(f"shared_{p}_{len(features)}",
                    terms=[Term(coef, (rand_literal(a), rand_literal(b))),
                           Term(float(rng.integers(-1, 2)), (rand_literal(a),))])

    if rng.random() < sz.cross_hinge_rate:
        terms = []
        for p in parts:
            v = int(rng.choice(p.variables))
            for val in variables[v].domain[1:]:
                terms.append(Term(float(rng.integers(0, 3)), (Literal(v, val),)))
        if any(t.coef for t in terms):
            add("agg_hinge", terms=[t for t in terms if t.coef],
                transform="hinge", threshold=float(rng.integers(1, 4)))

    constraints = []
    if rng.random() < sz.constraint_rate:
        n_cons = int(rng.integers(1, 3))
        for ci in range(n_cons):
            nv = int(rng.integers(1, min(3, len(variables)) + 1))
            vs = sorted(rng.choice(len(variables), size=nv, replace=False))
            tabs = []
            maxsum = 0.0
            for v in vs:
                # zero at code 0 keeps the all-zeros assignment feasible
                tab = [0.0] + [float(rng.integers(0, 3))
                               for _ in variables[v].domain[1:]]
                tabs.append(TableTerm(int(v), tuple(tab)))
                maxsum += max(tab)
            bound = float(rng.integers(0, max(1, int(maxsum))))
            constraints.append(Constraint(name=f"c{ci}", tables=tuple(tabs),
                                          op="<=", bound=bound))

    metadata = {"kind": "random", "seed": int(seed)}
    return ProblemModel.build(variables, features, parts, constraints, metadata)

"""Simulated users with hidden standard-normal utility weights.

Given a recommended partial assignment, the user returns the worst
feasible replacement that still closes at least a fraction alpha of the
conditional gap to the best replacement (both measured on the part's
feature subset under the hidden weights). When the recommendation is
already conditionally optimal the user returns it unchanged. Improvements
therefore satisfy the minimal-informativeness inequality by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compile import Restriction
from .inference import _lex_min_qualifier
from .model import (EPS, Configuration, PartialConfiguration, ProblemModel)


@dataclass
class SimulatedUser:
    w_star: np.ndarray
    alpha: float
    user_id: int = 0

    def to_json(self) -> dict:
        return {"user_id": self.user_id, "alpha": self.alpha,
                "w_star": [float(v) for v in self.w_star]}

    @staticmethod
    def from_json(doc: dict) -> "SimulatedUser":
        return SimulatedUser(w_star=np.asarray(doc["w_star"], dtype=float),
                             alpha=float(doc["alpha"]),
                             user_id=int(doc.get("user_id", 0)))


def sample_users(model: ProblemModel, count: int, seed: int,
                 alpha: float) -> list[SimulatedUser]:
    """Reproducible bank of users with i.i.d. standard-normal weights."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return [SimulatedUser(w_star=rng.standard_normal(model.num_features),
                          alpha=alpha, user_id=i)
            for i in range(count)]


def save_users(users: list[SimulatedUser], path, seed: int | None = None) -> None:
    """Persist a user bank so runs can be replayed byte-for-byte."""
    import json
    doc = {"seed": seed, "users": [u.to_json() for u in users]}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_users(path) -> list[SimulatedUser]:
    import json
    with open(path) as fh:
        doc = json.load(fh)
    return [SimulatedUser.from_json(u) for u in doc["users"]]


def _candidates(model, part, x: Configuration, objective, w):
    fixed = np.full(model.num_vars, -1, dtype=np.int64)
    part_vars = set(model.parts[part].variables)
    for v in range(model.num_vars):
        if v not in part_vars:
            fixed[v] = model.code_of(v, x.values[v])
    rest = Restriction(model, model.parts[part].variables, fixed,
                       sorted(objective), w)
    cands = rest.enumerate()
    cands = cands[rest.feasible(cands)]
    values = rest.values(cands)
    cur = np.array([model.code_of(v, x.values[v])
                    for v in model.parts[part].variables], dtype=np.int64)
    cur_idx = int(np.flatnonzero((cands == cur).all(axis=1))[0])
    return cands, values, cur_idx


def improve_part(user: SimulatedUser, model: ProblemModel, x: Configuration,
                 part: int, objective) -> PartialConfiguration:
    """Minimal alpha-informative improvement of x's assignment on a part."""
    cands, values, cur_idx = _candidates(model, part, x, objective, user.w_star)
    u_cur = values[cur_idx]
    opt_idx = _lex_min_qualifier(cands, values)
    gap = values[opt_idx] - u_cur
    p = model.parts[part]
    if gap <= EPS:  # conditionally optimal: satisfied user
        return PartialConfiguration(
            frozenset({part}), tuple(p.variables),
            tuple(x.values[v] for v in p.variables))
    threshold = u_cur + user.alpha * gap
    qual = values >= threshold - EPS
    vmin = values[qual].min()
    pick = np.flatnonzero(qual & (values <= vmin + EPS))
    sub = cands[pick]
    order = np.lexsort(sub.T[::-1])
    row = sub[order[0]]
    decoded = [int(model.variables[v].domain[c])
               for v, c in zip(p.variables, row)]
    return PartialConfiguration(frozenset({part}), tuple(p.variables),
                                tuple(decoded))


def _lex_min_rows(cands: np.ndarray, pick: np.ndarray) -> np.ndarray:
    sub = cands[pick]
    order = np.lexsort(sub.T[::-1])
    return sub[order[0]]


def improve_full(user: SimulatedUser, model: ProblemModel,
                 x: Configuration) -> Configuration:
    """Full-configuration analogue, for the classic baseline."""
    from .inference import full_evaluation
    cands, phi = full_evaluation(model)
    values = (phi * user.w_star).sum(axis=1)
    cur = model.compiled.encode(x.values)
    cur_idx = int(np.flatnonzero((cands == cur).all(axis=1))[0])
    u_cur = values[cur_idx]
    opt_idx = _lex_min_qualifier(cands, values)
    gap = values[opt_idx] - u_cur
    if gap <= EPS:
        return x
    threshold = u_cur + user.alpha * gap
    qual = values >= threshold - EPS
    vmin = values[qual].min()
    pick = np.flatnonzero(qual & (values <= vmin + EPS))
    row = _lex_min_rows(cands, pick)
    return Configuration(model.compiled.decode(row))


def matched_gain_provider(user: SimulatedUser, gains):
    """Full-configuration improvements whose hidden-utility gain tracks a
    given per-iteration schedule (e.g. the gains realized by a part-wise
    run for the same user), for like-for-like baseline comparisons.

    At iteration t the returned configuration is the worst feasible one
    achieving at least gains[t] (the true optimum when even it falls
    short); past the end of the schedule the user is satisfied.
    """
    from .inference import full_evaluation
    counter = {"t": 0}

    def provider(model, x):
        t = counter["t"]
        counter["t"] += 1
        g = gains[t] if t < len(gains) else 0.0
        if g <= EPS:
            return x
        cands, phi = full_evaluation(model)
        values = (phi * user.w_star).sum(axis=1)
        cur = model.compiled.encode(x.values)
        cur_idx = int(np.flatnonzero((cands == cur).all(axis=1))[0])
        u_cur = values[cur_idx]
        qual = values >= u_cur + g - EPS
        if not qual.any():
            opt_idx = _lex_min_qualifier(cands, values)
            return Configuration(model.compiled.decode(cands[opt_idx]))
        vmin = values[qual].min()
        pick = np.flatnonzero(qual & (values <= vmin + EPS))
        row = _lex_min_rows(cands, pick)
        return Configuration(model.compiled.decode(row))

    return provider


def improvement_provider(user: SimulatedUser):
    """Adapt a user to the learner's part-improvement callback."""
    def provider(model, x, part, objective):
        return improve_part(user, model, x, part, objective)
    return provider


def full_improvement_provider(user: SimulatedUser):
    def provider(model, x):
        return improve_full(user, model, x)
    return provider

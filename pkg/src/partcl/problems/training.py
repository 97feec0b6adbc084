"""Week-long training plan benchmark.

Seven days of five time slots (two morning, two afternoon, one evening);
each available slot holds one of seven activities or rest. An externally
provided table maps activities to improvement and fatigue over five body
parts. Features: per-day improvement and fatigue per body part (each
day's exclusive features, which also makes the part-dependency network a
path over consecutive days) and signed activity-alternation indicators
between consecutive days. Hard constraints: availability, and
per-body-part fatigue over every window of three consecutive slots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from ..model import (BasicPart, Constraint, FeatureDef, Literal, ProblemModel,
                     TableTerm, Term, Variable)

DAYS = 7
SLOTS = 5
REST = 0


def _default_asset() -> dict:
    ref = resources.files(__package__) / "assets" / "training_default.json"
    return json.loads(ref.read_text())


@dataclass
class TrainingConfig:
    activities: list[str] = field(default_factory=list)
    body_parts: list[str] = field(default_factory=list)
    improvement: dict[str, dict[str, int]] = field(default_factory=dict)
    fatigue: dict[str, dict[str, int]] = field(default_factory=dict)
    fatigue_threshold: int = 6
    availability: list[list[bool]] = field(default_factory=list)

    @staticmethod
    def default() -> "TrainingConfig":
        asset = _default_asset()
        avail = [[s in asset["available_slots"] for s in range(SLOTS)]
                 for _ in range(DAYS)]
        return TrainingConfig(
            activities=list(asset["activities"]),
            body_parts=list(asset["body_parts"]),
            improvement=asset["improvement"],
            fatigue=asset["fatigue"],
            fatigue_threshold=int(asset["fatigue_threshold"]),
            availability=avail,
        )


def build_training_plan(config: TrainingConfig | None = None) -> ProblemModel:
    cfg = config or TrainingConfig.default()
    acts = cfg.activities
    n_act = len(acts)
    domain = tuple(range(n_act + 1))  # 0 = rest

    variables = []
    parts = []
    for d in range(DAYS):
        var_ids = []
        for s in range(SLOTS):
            var_ids.append(len(variables))
            variables.append(Variable(name=f"day{d}_slot{s}", domain=domain))
        parts.append(BasicPart(index=d, name=f"day{d}",
                               variables=tuple(var_ids)))

    def slot_var(d: int, s: int) -> int:
        return d * SLOTS + s

    features = []

    def add(name, terms=(), linear=(), transform="identity", threshold=0.0):
        features.append(FeatureDef(index=len(features), name=name,
                                   terms=tuple(terms), linear=tuple(linear),
                                   transform=transform, threshold=threshold))

    # per-day improvement and fatigue per body part; exclusive to the day
    for d in range(DAYS):
        for kind, table in (("improvement", cfg.improvement),
                            ("fatigue", cfg.fatigue)):
            for bp in cfg.body_parts:
                terms = []
                for s in range(SLOTS):
                    for ai, act in enumerate(acts, start=1):
                        coef = float(table[act][bp])
                        if coef:
                            terms.append(Term(coef, (Literal(slot_var(d, s), ai),)))
                add(f"{kind}_{bp}_day{d}", terms=terms)

    # activity alternation between consecutive days: +1 when the activity is
    # present in exactly one of the two days, -1 otherwise
    for ai, act in enumerate(acts, start=1):
        for d in range(DAYS - 1):
            absent_d = tuple(Literal(slot_var(d, s), ai, negate=True)
                             for s in range(SLOTS))
            absent_n = tuple(Literal(slot_var(d + 1, s), ai, negate=True)
                             for s in range(SLOTS))
            add(f"alternates_{act}_day{d}",
                terms=[Term(1.0, absent_d), Term(1.0, absent_n),
                       Term(-2.0, absent_d + absent_n)],
                transform="signed")

    constraints = []
    active = {v: 0.0 if v == REST else 1.0 for v in domain}
    for d in range(DAYS):
        for s in range(SLOTS):
            if not cfg.availability[d][s]:
                constraints.append(Constraint(
                    name=f"availability_day{d}_slot{s}",
                    tables=(TableTerm.from_mapping(slot_var(d, s), domain, active),),
                    op="<=", bound=0.0))

    for bp in cfg.body_parts:
        fat = {0: 0.0}
        fat.update({ai: float(cfg.fatigue[act][bp])
                    for ai, act in enumerate(acts, start=1)})
        for start in range(DAYS * SLOTS - 2):
            constraints.append(Constraint(
                name=f"fatigue_{bp}_slots{start}to{start + 2}",
                tables=tuple(TableTerm.from_mapping(v, domain, fat)
                             for v in range(start, start + 3)),
                op="<=", bound=float(cfg.fatigue_threshold)))

    metadata = {
        "kind": "training",
        "days": DAYS,
        "slots": SLOTS,
        "activities": {"0": "rest",
                       **{str(i): a for i, a in enumerate(acts, start=1)}},
        "body_parts": list(cfg.body_parts),
        "availability": [list(map(bool, row)) for row in cfg.availability],
        "fatigue_threshold": cfg.fatigue_threshold,
    }
    return ProblemModel.build(variables, features, parts, constraints, metadata)

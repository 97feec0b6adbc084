"""Hotel furnishing benchmark.

Rooms on a ring of corridors (one path per floor, stairs linking floors,
a service stair closing the ring) are furnished from a catalog and take a
type derived from their furniture and position: normal room, suite, dorm,
or unassigned. Eight local features describe each room; twenty global
features aggregate type counts (with hinge transforms), furniture cost
against a budget, and guest capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import (BasicPart, Constraint, FeatureDef, LinearTerm, Literal,
                     ProblemModel, TableTerm, Term, Variable)

UNASSIGNED, NORMAL, SUITE, DORM = 0, 1, 2, 3
TYPE_NAMES = {UNASSIGNED: "unassigned", NORMAL: "normal",
              SUITE: "suite", DORM: "dorm"}


@dataclass(frozen=True)
class CatalogItem:
    name: str
    cost: float          # currency units
    guests: int
    max_count: int


DEFAULT_CATALOG = (
    CatalogItem("single_bed", cost=2, guests=1, max_count=3),
    CatalogItem("double_bed", cost=3, guests=2, max_count=3),
    CatalogItem("bunk_bed", cost=3, guests=4, max_count=3),
    CatalogItem("table", cost=1, guests=0, max_count=2),
    CatalogItem("sofa", cost=2, guests=0, max_count=2),
)


@dataclass
class HotelConfig:
    floors: int = 3
    rooms_per_floor: int = 5
    catalog: tuple[CatalogItem, ...] = DEFAULT_CATALOG
    room_capacity: int = 6
    budget: float = 30.0

    @staticmethod
    def default() -> "HotelConfig":
        return HotelConfig()

    @staticmethod
    def reduced() -> "HotelConfig":
        """Four-room single-floor variant small enough for exhaustive
        full inference; used for cross-verification."""
        return HotelConfig(
            floors=1, rooms_per_floor=4,
            catalog=(
                CatalogItem("single_bed", cost=2, guests=1, max_count=2),
                CatalogItem("bunk_bed", cost=3, guests=4, max_count=2),
                CatalogItem("table", cost=1, guests=0, max_count=1),
                CatalogItem("sofa", cost=2, guests=0, max_count=1),
            ),
            room_capacity=3, budget=10.0)


def _ring_order(cfg: HotelConfig) -> list[int]:
    """Boustrophedon walk over floors; consecutive rooms are adjacent."""
    order = []
    for f in range(cfg.floors):
        rooms = list(range(f * cfg.rooms_per_floor, (f + 1) * cfg.rooms_per_floor))
        order.extend(rooms if f % 2 == 0 else rooms[::-1])
    return order


def build_hotel(config: HotelConfig | None = None) -> ProblemModel:
    cfg = config or HotelConfig.default()
    n_rooms = cfg.floors * cfg.rooms_per_floor
    catalog = cfg.catalog
    items = [it.name for it in catalog]
    for required in ("single_bed", "bunk_bed", "table", "sofa"):
        if required not in items:
            raise ValueError(f"catalog must include {required!r}")

    def has(name: str) -> bool:
        return name in items

    # fixed facility placement: bathrooms near the ends of each corridor,
    # the bar in the middle of the lounge floor (floor 1 when present)
    mid = cfg.rooms_per_floor // 2
    near_bath = [r % cfg.rooms_per_floor != mid or cfg.rooms_per_floor <= 2
                 for r in range(n_rooms)]
    bar_floor = min(1, cfg.floors - 1)
    bar_room = bar_floor * cfg.rooms_per_floor + mid
    near_bar = [abs(r - bar_room) <= 1
                and r // cfg.rooms_per_floor == bar_floor
                for r in range(n_rooms)]

    ring = _ring_order(cfg)
    succ = {ring[i]: ring[(i + 1) % n_rooms] for i in range(n_rooms)}

    variables = []
    parts = []
    type_var = {}
    item_var = {}
    for r in range(n_rooms):
        var_ids = [len(variables)]
        type_var[r] = len(variables)
        variables.append(Variable(name=f"room{r}_type",
                                  domain=(UNASSIGNED, NORMAL, SUITE, DORM)))
        for it in catalog:
            item_var[(r, it.name)] = len(variables)
            var_ids.append(len(variables))
            variables.append(Variable(name=f"room{r}_{it.name}",
                                      domain=tuple(range(it.max_count + 1))))
        parts.append(BasicPart(index=r, name=f"room{r}",
                               variables=tuple(var_ids)))

    features = []

    def add(name, terms=(), linear=(), transform="identity", threshold=0.0):
        features.append(FeatureDef(index=len(features), name=name,
                                   terms=tuple(terms), linear=tuple(linear),
                                   transform=transform, threshold=threshold))

    # --- 20 global features -------------------------------------------------
    def count_terms(tcode, negate=False):
        return [Term(1.0, (Literal(type_var[r], tcode, negate=negate),))
                for r in range(n_rooms)]

    def neg_count_terms(tcode):
        return [Term(-1.0, (Literal(type_var[r], tcode),))
                for r in range(n_rooms)]

    add("count_normal", terms=count_terms(NORMAL))
    add("count_suite", terms=count_terms(SUITE))
    add("count_dorm", terms=count_terms(DORM))
    add("count_occupied", terms=count_terms(UNASSIGNED, negate=True))
    add("over_normal", terms=count_terms(NORMAL), transform="hinge",
        threshold=4.0)
    add("over_suite", terms=count_terms(SUITE), transform="hinge",
        threshold=2.0)
    add("over_dorm", terms=count_terms(DORM), transform="hinge", threshold=3.0)
    cost_linear = [LinearTerm(it.cost / cfg.budget, item_var[(r, it.name)])
                   for r in range(n_rooms) for it in catalog]
    add("total_cost", linear=cost_linear)
    add("over_budget", linear=cost_linear, transform="hinge", threshold=1.0)
    add("total_capacity", linear=[
        LinearTerm(it.guests / 10.0, item_var[(r, it.name)])
        for r in range(n_rooms) for it in catalog if it.guests])
    beds = [it.name for it in catalog if "bed" in it.name]
    add("total_beds", linear=[LinearTerm(0.1, item_var[(r, b)])
                              for r in range(n_rooms) for b in beds])
    add("total_tables", linear=[LinearTerm(0.1, item_var[(r, "table")])
                                for r in range(n_rooms)])
    add("total_sofas", linear=[LinearTerm(0.1, item_var[(r, "sofa")])
                               for r in range(n_rooms)])
    add("bunk_total", linear=[LinearTerm(0.1, item_var[(r, "bunk_bed")])
                              for r in range(n_rooms)])
    add("single_total", linear=[LinearTerm(0.1, item_var[(r, "single_bed")])
                                for r in range(n_rooms)])
    if has("double_bed"):
        add("double_single_balance",
            linear=[LinearTerm(0.1, item_var[(r, "double_bed")])
                    for r in range(n_rooms)]
            + [LinearTerm(-0.1, item_var[(r, "single_bed")])
               for r in range(n_rooms)])
    else:
        add("table_sofa_balance",
            linear=[LinearTerm(0.1, item_var[(r, "table")])
                    for r in range(n_rooms)]
            + [LinearTerm(-0.1, item_var[(r, "sofa")])
               for r in range(n_rooms)])
    add("suite_minus_dorm", terms=count_terms(SUITE) + neg_count_terms(DORM))
    add("special_rooms", terms=count_terms(SUITE) + count_terms(DORM))
    add("empty_rooms", terms=count_terms(UNASSIGNED))
    # guests beyond one per bed: rewards or penalizes dense sleeping
    add("crowding", linear=[
        LinearTerm((it.guests - 1) / 10.0, item_var[(r, it.name)])
        for r in range(n_rooms) for it in catalog if "bed" in it.name])

    # --- 8 local features per room ------------------------------------------
    for r in range(n_rooms):
        tv = type_var[r]
        add(f"room{r}_is_normal", terms=[Term(1.0, (Literal(tv, NORMAL),))],
            transform="signed")
        add(f"room{r}_is_suite", terms=[Term(1.0, (Literal(tv, SUITE),))],
            transform="signed")
        add(f"room{r}_is_dorm", terms=[Term(1.0, (Literal(tv, DORM),))],
            transform="signed")
        add(f"room{r}_furniture", linear=[LinearTerm(1.0, item_var[(r, it.name)])
                                          for it in catalog])
        add(f"room{r}_beds", linear=[LinearTerm(1.0, item_var[(r, b)])
                                     for b in beds])
        # occupying a room with good facility access scores +1, occupying a
        # poorly placed one scores -1 (and symmetrically for leaving it empty)
        add(f"room{r}_bath_access",
            terms=[Term(1.0, (Literal(tv, UNASSIGNED, negate=near_bath[r]),))],
            transform="signed")
        add(f"room{r}_bar_access",
            terms=[Term(1.0, (Literal(tv, UNASSIGNED, negate=near_bar[r]),))],
            transform="signed")
        add(f"room{r}_same_type_next",
            terms=[Term(1.0, (Literal(tv, t), Literal(type_var[succ[r]], t)))
                   for t in (UNASSIGNED, NORMAL, SUITE, DORM)],
            transform="signed")

    # --- hard constraints -----------------------------------------------------
    constraints = []

    def ident(vid):
        dom = variables[vid].domain
        return TableTerm(vid, tuple(float(v) for v in dom))

    def room_rule(r, name, item_names, op, bound, tcode=None, coefs=None):
        cond = (Literal(type_var[r], tcode),) if tcode is not None else ()
        tabs = []
        for i, nm in enumerate(item_names):
            vid = item_var[(r, nm)]
            dom = variables[vid].domain
            c = 1.0 if coefs is None else coefs[i]
            tabs.append(TableTerm(vid, tuple(c * float(v) for v in dom)))
        constraints.append(Constraint(name=f"room{r}_{name}", tables=tuple(tabs),
                                      op=op, bound=float(bound), condition=cond))

    def forbid(r, name, tcode):
        constraints.append(Constraint(
            name=f"room{r}_{name}", tables=(),
            op="<=", bound=-1.0, condition=(Literal(type_var[r], tcode),)))

    main_beds = [b for b in beds if b != "bunk_bed"]
    for r in range(n_rooms):
        room_rule(r, "capacity", items, "<=", cfg.room_capacity)
        room_rule(r, "unassigned_empty", items, "<=", 0, tcode=UNASSIGNED)
        # normal: one to three proper beds, no bunk beds, a table, near a bathroom
        if main_beds:
            room_rule(r, "normal_beds_max", main_beds, "<=", 3, tcode=NORMAL)
            room_rule(r, "normal_beds_min", main_beds, ">=", 1, tcode=NORMAL)
        if has("bunk_bed"):
            room_rule(r, "normal_no_bunk", ["bunk_bed"], "<=", 0, tcode=NORMAL)
        if has("table"):
            room_rule(r, "normal_table", ["table"], ">=", 1, tcode=NORMAL)
        if not near_bath[r]:
            forbid(r, "normal_needs_bathroom", NORMAL)
        # suite: exactly one proper bed, a table and a sofa, near bathroom and bar
        if main_beds:
            room_rule(r, "suite_one_bed", main_beds, "==", 1, tcode=SUITE)
        if has("bunk_bed"):
            room_rule(r, "suite_no_bunk", ["bunk_bed"], "<=", 0, tcode=SUITE)
        if has("table"):
            room_rule(r, "suite_table", ["table"], ">=", 1, tcode=SUITE)
        if has("sofa"):
            room_rule(r, "suite_sofa", ["sofa"], ">=", 1, tcode=SUITE)
        if not (near_bath[r] and near_bar[r]):
            forbid(r, "suite_needs_facilities", SUITE)
        # dorm: bunk beds only, at least two, no sofas
        if has("bunk_bed"):
            room_rule(r, "dorm_bunks", ["bunk_bed"], ">=", 2, tcode=DORM)
        if main_beds:
            room_rule(r, "dorm_no_single_double", main_beds, "<=", 0, tcode=DORM)
        if has("sofa"):
            room_rule(r, "dorm_no_sofa", ["sofa"], "<=", 0, tcode=DORM)

    metadata = {
        "kind": "hotel",
        "rooms": n_rooms,
        "floors": cfg.floors,
        "rooms_per_floor": cfg.rooms_per_floor,
        "budget": cfg.budget,
        "catalog": [{"name": it.name, "cost": it.cost, "guests": it.guests,
                     "max_count": it.max_count} for it in catalog],
        "types": {str(k): v for k, v in TYPE_NAMES.items()},
        "near_bathroom": near_bath,
        "near_bar": near_bar,
        "ring": ring,
        "gauges": [{"label": "budget used", "feature": "total_cost",
                    "scale": 100.0, "unit": "%"}],
    }
    return ProblemModel.build(variables, features, parts, constraints, metadata)

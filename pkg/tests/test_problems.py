"""Benchmark builders: declared shapes, live constraints, serialization."""

import numpy as np
import pytest

from partcl import io as pio
from partcl.model import Configuration, ModelError
from partcl.problems import (BUILDERS, InstanceSizes, build_grid,
                             build_training_plan, get_problem,
                             random_small_instance)
from partcl.problems.hotel import DORM, NORMAL, SUITE
from partcl.problems.training import TrainingConfig


class TestGrid:
    def test_shape(self, grid):
        assert grid.num_features == 24
        assert grid.num_parts == 4
        assert grid.feature_bound == 1.0
        assert grid.part_feature_bound == 8

    def test_each_block_touches_eight_edges(self, grid):
        for p in grid.parts:
            assert len(p.features) == 8

    def test_four_exclusive_internal_edges_per_block(self, grid):
        for p in grid.parts:
            others = set()
            for q in grid.parts:
                if q.index != p.index:
                    others |= q.features
            assert len(p.features - others) == 4

    def test_no_hard_constraints(self, grid):
        assert not grid.hard_constraints

    def test_global_optimum_anchors_regret_axis(self, grid):
        from partcl.inference import infer_full
        assert infer_full(grid, np.ones(24)).value == 24.0


class TestTraining:
    def test_shape(self, training):
        assert training.num_parts == 7
        assert training.num_vars == 35
        assert all(len(v.domain) == 8 for v in training.variables)
        assert training.num_features == 70 + 42

    def test_all_rest_plan(self, training):
        x = Configuration(tuple([0] * 35))
        phi = training.feature_vector(x)
        for f in training.features:
            if f.name.startswith(("improvement_", "fatigue_")):
                assert phi[f.index] == 0.0
        assert training.check_feasible(x)[0]

    def test_fatigue_cap_violation_cites_constraint(self):
        cfg = TrainingConfig.default()
        cfg.availability = [[True] * 5 for _ in range(7)]
        model = build_training_plan(cfg)
        values = [0] * 35
        values[0] = values[1] = values[2] = 2  # three consecutive runs
        ok, violated = model.check_feasible(Configuration(tuple(values)))
        assert not ok
        assert any(v.startswith("fatigue_legs_slots0") for v in violated)

    def test_constraints_are_live(self, training, rng):
        # every constraint must be violable and satisfiable over the raw
        # domain product (witnesses need not satisfy other constraints)
        cm = training.compiled
        codes = rng.integers(0, 8, size=(4000, 35)).astype(np.int64)
        codes[:100] = 0  # guarantee satisfied witnesses everywhere
        sat = cm.constraints.satisfied_matrix(codes)
        names = cm.constraints.names
        for c, name in enumerate(names):
            assert sat[:, c].any(), f"{name} never satisfied"
            assert (~sat[:, c]).any(), f"{name} never violated"


class TestHotel:
    def test_shape(self, hotel):
        assert hotel.num_parts == 15
        assert hotel.num_features == 20 + 15 * 8

    def test_empty_hotel(self, hotel):
        empty = Configuration(tuple(v.domain[0] for v in hotel.variables))
        assert hotel.check_feasible(empty)[0]
        phi = hotel.feature_vector(empty)
        for name in ("count_normal", "count_suite", "count_dorm",
                     "count_occupied", "total_cost"):
            assert phi[hotel.feature_by_name(name).index] == 0.0
        for f in hotel.features:
            if f.transform == "hinge":
                assert phi[f.index] == 0.0

    def test_room_type_rules(self, hotel):
        empty = list(tuple(v.domain[0] for v in hotel.variables))
        # a normal room needs a proper bed and a table, and no bunk beds
        values = list(empty)
        values[hotel.var_index("room0_type")] = NORMAL
        ok, violated = hotel.check_feasible(Configuration(tuple(values)))
        assert not ok
        assert "room0_normal_beds_min" in violated
        values[hotel.var_index("room0_single_bed")] = 1
        values[hotel.var_index("room0_table")] = 1
        assert hotel.check_feasible(Configuration(tuple(values)))[0]
        values[hotel.var_index("room0_bunk_bed")] = 1
        ok, violated = hotel.check_feasible(Configuration(tuple(values)))
        assert not ok
        assert "room0_normal_no_bunk" in violated

    def test_suite_requires_bar_proximity(self, hotel):
        far_from_bar = 0  # floor 0 is away from the lounge floor's bar
        assert not hotel.metadata["near_bar"][far_from_bar]
        values = list(tuple(v.domain[0] for v in hotel.variables))
        values[hotel.var_index("room0_type")] = SUITE
        values[hotel.var_index("room0_single_bed")] = 1
        values[hotel.var_index("room0_table")] = 1
        values[hotel.var_index("room0_sofa")] = 1
        ok, violated = hotel.check_feasible(Configuration(tuple(values)))
        assert not ok
        assert "room0_suite_needs_facilities" in violated

    def test_dorm_rules(self, hotel):
        values = list(tuple(v.domain[0] for v in hotel.variables))
        values[hotel.var_index("room3_type")] = DORM
        values[hotel.var_index("room3_bunk_bed")] = 2
        assert hotel.check_feasible(Configuration(tuple(values)))[0]
        values[hotel.var_index("room3_bunk_bed")] = 1
        ok, violated = hotel.check_feasible(Configuration(tuple(values)))
        assert not ok
        assert "room3_dorm_bunks" in violated

    def test_constraints_are_live(self, hotel, rng):
        cm = hotel.compiled
        sizes = np.array([len(v.domain) for v in hotel.variables])
        codes = rng.integers(0, sizes, size=(6000, hotel.num_vars)).astype(np.int64)
        codes[:100] = 0
        sat = cm.constraints.satisfied_matrix(codes)
        for c, name in enumerate(cm.constraints.names):
            assert sat[:, c].any(), f"{name} never satisfied"
            assert (~sat[:, c]).any(), f"{name} never violated"

    def test_reduced_variant_shape(self, hotel_reduced):
        assert hotel_reduced.num_parts == 4
        assert hotel_reduced.num_features == 20 + 4 * 8


class TestRandomInstances:
    def test_same_seed_same_model(self):
        a = random_small_instance(7)
        b = random_small_instance(7)
        assert a.variables == b.variables
        assert a.features == b.features
        assert a.hard_constraints == b.hard_constraints

    def test_fuzz_thousand_seeds_validate(self):
        for seed in range(1000):
            model = random_small_instance(seed)
            assert model.num_parts >= 2

    def test_enumeration_budgets(self):
        sizes = InstanceSizes()
        for seed in range(50):
            model = random_small_instance(seed, sizes)
            per_part = max(
                int(np.prod([len(model.variables[v].domain)
                             for v in p.variables]))
                for p in model.parts)
            total = int(np.prod([len(v.domain) for v in model.variables]))
            assert per_part <= 10_000
            assert total <= 1_000_000

    def test_all_zeros_feasible(self):
        for seed in range(100):
            model = random_small_instance(seed)
            x = Configuration(tuple(v.domain[0] for v in model.variables))
            assert model.check_feasible(x)[0]


class TestSerialization:
    @pytest.mark.parametrize("name", sorted(BUILDERS))
    def test_roundtrip(self, name, tmp_path, rng):
        model = BUILDERS[name]()
        path = tmp_path / f"{name}.json"
        pio.save_problem(model, path)
        back = pio.load_problem(path)
        assert back.num_features == model.num_features
        assert back.feature_bound == model.feature_bound
        assert back.part_feature_bound == model.part_feature_bound
        sizes = np.array([len(v.domain) for v in model.variables])
        for _ in range(5):
            codes = rng.integers(0, sizes)
            x = Configuration(tuple(
                int(model.variables[i].domain[c]) for i, c in enumerate(codes)))
            np.testing.assert_array_equal(model.feature_vector(x),
                                          back.feature_vector(x))
            assert model.check_feasible(x)[0] == back.check_feasible(x)[0]

    def test_get_problem_resolves_files(self, tmp_path):
        path = tmp_path / "grid.json"
        pio.save_problem(build_grid(), path)
        model = get_problem(str(path))
        assert model.num_features == 24
        with pytest.raises(KeyError):
            get_problem("nonsense")

    def test_loader_rejects_bad_documents(self, tmp_path):
        doc = pio.model_to_json(build_grid())
        doc["features"][0]["terms"][0]["literals"][0]["var"] = "nope"
        import json
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelError) as exc:
            pio.load_problem(path)
        assert "features[0].terms[0].literals[0]" in str(exc.value)

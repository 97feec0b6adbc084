"""Simulated users: minimal informative improvements under hidden weights."""

import numpy as np
import pytest

from partcl.compile import Restriction
from partcl.inference import infer_part
from partcl.model import Configuration, EPS
from partcl.simuser import (SimulatedUser, improve_full, improve_part,
                            sample_users)


def _utilities_over_part(model, w, part, x, objective):
    fixed = np.full(model.num_vars, -1, dtype=np.int64)
    pv = set(model.parts[part].variables)
    for v in range(model.num_vars):
        if v not in pv:
            fixed[v] = model.code_of(v, x.values[v])
    rest = Restriction(model, model.parts[part].variables, fixed,
                       sorted(objective), w)
    cands = rest.enumerate()
    cands = cands[rest.feasible(cands)]
    return rest, cands, rest.values(cands)


class TestImprovePart:
    def test_satisfied_at_conditional_optimum(self, grid):
        user = sample_users(grid, 1, seed=0, alpha=0.5)[0]
        x0 = Configuration(tuple([0] * 16))
        opt = infer_part(grid, user.w_star, sorted(grid.parts[0].features), 0,
                         grid.complement(x0, 0))
        imp = improve_part(user, grid, opt.config, 0,
                           sorted(grid.parts[0].features))
        assert imp == grid.restrict(opt.config, [0])

    def test_alpha_one_achieves_conditional_optimum_utility(self, grid):
        user = SimulatedUser(
            w_star=np.random.default_rng(8).standard_normal(24), alpha=1.0)
        x0 = Configuration(tuple([0] * 16))
        I = sorted(grid.parts[1].features)
        imp = improve_part(user, grid, x0, 1, I)
        _rest, cands, values = _utilities_over_part(grid, user.w_star, 1, x0, I)
        vmax = values.max()
        row = np.array([grid.code_of(v, val) for v, val
                        in zip(imp.variables, imp.values)])
        got = values[np.flatnonzero((cands == row).all(axis=1))[0]]
        assert got >= vmax - 1e-9

    def test_half_informative_minimal_qualifying_block(self, grid):
        # enumerate, filter by the half-gap constraint, take the worst
        user = SimulatedUser(w_star=np.ones(24), alpha=0.5)
        x0 = Configuration(tuple([0] * 16))
        I = sorted(grid.parts[0].features)
        _rest, cands, values = _utilities_over_part(grid, user.w_star, 0, x0, I)
        cur = values[0]  # all-zeros block is the first candidate
        gap = values.max() - cur
        threshold = cur + 0.5 * gap
        qual = values >= threshold - EPS
        expected_value = values[qual].min()
        imp = improve_part(user, grid, x0, 0, I)
        row = np.array([grid.code_of(v, val) for v, val
                        in zip(imp.variables, imp.values)])
        got = values[np.flatnonzero((cands == row).all(axis=1))[0]]
        assert got == expected_value
        assert got >= threshold - 1e-9

    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 1.0])
    def test_every_improvement_is_alpha_informative(self, grid, alpha, rng):
        users = sample_users(grid, 3, seed=17, alpha=alpha)
        for user in users:
            for _ in range(10):
                values = tuple(int(v) for v in rng.integers(0, 2, 16))
                x = Configuration(values)
                part = int(rng.integers(0, 4))
                I = sorted(grid.parts[part].features)
                imp = improve_part(user, grid, x, part, I)
                _r, cands, vals = _utilities_over_part(grid, user.w_star,
                                                       part, x, I)
                cur_row = np.array([grid.code_of(v, x.values[v])
                                    for v in grid.parts[part].variables])
                cur = vals[np.flatnonzero((cands == cur_row).all(axis=1))[0]]
                imp_row = np.array([grid.code_of(v, val) for v, val
                                    in zip(imp.variables, imp.values)])
                got = vals[np.flatnonzero((cands == imp_row).all(axis=1))[0]]
                creg = max(0.0, vals.max() - cur)
                assert got - cur >= alpha * creg - 1e-9

    def test_minimality_on_training_day(self, training, rng):
        user = sample_users(training, 1, seed=23, alpha=0.3)[0]
        x0 = Configuration(tuple([0] * 35))
        I = sorted(training.parts[2].features)
        imp = improve_part(user, training, x0, 2, I)
        _r, cands, vals = _utilities_over_part(training, user.w_star, 2, x0, I)
        cur_row = np.array([training.code_of(v, 0)
                            for v in training.parts[2].variables])
        cur = vals[np.flatnonzero((cands == cur_row).all(axis=1))[0]]
        creg = vals.max() - cur
        if creg > EPS:
            threshold = cur + 0.3 * creg
            qual = vals >= threshold - EPS
            imp_row = np.array([training.code_of(v, val) for v, val
                                in zip(imp.variables, imp.values)])
            got = vals[np.flatnonzero((cands == imp_row).all(axis=1))[0]]
            assert abs(got - vals[qual].min()) <= 1e-12


class TestImproveFull:
    def test_satisfied_at_global_optimum(self, grid):
        user = sample_users(grid, 1, seed=31, alpha=0.5)[0]
        from partcl.inference import infer_full
        opt = infer_full(grid, user.w_star)
        assert improve_full(user, grid, opt.config) == opt.config

    def test_alpha_one_matches_optimum_utility(self, grid):
        user = SimulatedUser(
            w_star=np.random.default_rng(33).standard_normal(24), alpha=1.0)
        from partcl.inference import infer_full
        x0 = Configuration(tuple([0] * 16))
        imp = improve_full(user, grid, x0)
        opt = infer_full(grid, user.w_star)
        assert abs(grid.utility(user.w_star, imp) - opt.value) <= 1e-9

    def test_alpha_half_closes_half_the_gap(self, grid):
        user = SimulatedUser(
            w_star=np.random.default_rng(34).standard_normal(24), alpha=0.5)
        from partcl.inference import infer_full
        x0 = Configuration(tuple([0] * 16))
        opt = infer_full(grid, user.w_star)
        u0 = grid.utility(user.w_star, x0)
        imp = improve_full(user, grid, x0)
        gain = grid.utility(user.w_star, imp) - u0
        assert gain >= 0.5 * (opt.value - u0) - 1e-9


class TestSampling:
    def test_reproducible(self, grid):
        a = sample_users(grid, 5, seed=7, alpha=0.3)
        b = sample_users(grid, 5, seed=7, alpha=0.3)
        for ua, ub in zip(a, b):
            assert np.array_equal(ua.w_star, ub.w_star)

    def test_count(self, grid):
        assert len(sample_users(grid, 20, seed=0, alpha=0.3)) == 20
        with pytest.raises(ValueError):
            sample_users(grid, 0, seed=0, alpha=0.3)

    def test_standard_normal_statistics(self, grid):
        users = sample_users(grid, 2000, seed=99, alpha=0.3)
        coords = np.concatenate([u.w_star for u in users])
        assert coords.size >= 48_000
        assert abs(coords.mean()) < 0.01
        assert abs(coords.std() - 1.0) < 0.01

    def test_serialization_roundtrip(self, grid):
        user = sample_users(grid, 1, seed=1, alpha=0.5)[0]
        back = SimulatedUser.from_json(user.to_json())
        assert np.array_equal(back.w_star, user.w_star)
        assert back.alpha == user.alpha

    def test_bank_file_roundtrip(self, grid, tmp_path):
        from partcl.simuser import load_users, save_users
        users = sample_users(grid, 3, seed=4, alpha=0.1)
        path = tmp_path / "bank.json"
        save_users(users, path, seed=4)
        back = load_users(path)
        assert len(back) == 3
        for a, b in zip(users, back):
            assert np.array_equal(a.w_star, b.w_star)
            assert a.alpha == b.alpha and a.user_id == b.user_id

"""Experiment driver: simulated elicitation runs, regret metrics, and
runtime verification of the learner's theoretical guarantees.

Every simulated run checks, at every iteration:

- the weight-update inner-product identity (the update moves the estimate
  toward the hidden weights by exactly the hidden-utility gain on the
  updated coordinates),
- the weight-norm growth bound ||w||^2 <= 4 D^2 S^2 t,
- conditional optimality of the recommendation on its exclusive subset,
- the average-conditional-regret bound
  (1/t) sum CREG <= 2 D S ||w*|| / (alpha sqrt(t)) + (1/(alpha t)) sum zeta,
- minimal informativeness of every simulated improvement,
- that inference never worsens the current-model objective it maximizes,

and, whenever the two-clean-sweeps stopping rule fires, that the final
configuration is certifiably locally optimal under the hidden weights.
Violations raise with full iteration context.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compile import EnumerationTooLarge, Restriction
from .gai import decompose
from .inference import certify_local_optimum, infer_full, infer_part
from .learner import (IterationRecord, LearnerState, cl_step, has_converged,
                      pcl_step)
from .model import EPS, Configuration, ProblemModel
from .search import SweepUnsupported
from .selection import make_strategy
from .simuser import (SimulatedUser, full_improvement_provider,
                      improvement_provider, matched_gain_provider,
                      sample_users)

TOL = 1e-9


class RegretUnavailable(RuntimeError):
    """Exact full inference is out of reach; regret is not reported."""


class InvariantViolation(AssertionError):
    def __init__(self, name: str, context: dict):
        self.name = name
        self.context = context
        super().__init__(f"{name}: {json.dumps(context, default=str)}")


@dataclass
class ExperimentConfig:
    problem: str = "grid"
    algorithm: str = "pcl"            # "pcl" or "cl"
    alpha: float = 0.3
    users: int = 20
    iterations: int = 100             # T
    selection: str = "random"
    seed: int = 0
    ucb_c: float = 1.0
    compute_regret: bool = True
    matched_gain: bool = False        # cl only: match feedback gain to a
    check_invariants: bool = True     # paired pcl run with the same seed
    out_dir: str | None = None

    def validate(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if self.algorithm not in ("pcl", "cl"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class MetricsRow:
    user_id: int
    t: int
    part: str
    regret: float | None
    conditional_regret: float | None
    zeta: float | None
    bound_value: float | None
    update_set: str
    satisfied: bool
    cumulative_inference_seconds: float


@dataclass
class UserRun:
    user: SimulatedUser
    rows: list[MetricsRow]
    converged_at: int | None
    final: Configuration
    true_gains: list[float]
    trace: list[IterationRecord] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Regret operations


def optimum_value(model: ProblemModel, w_star: np.ndarray) -> float:
    """u*(x*), cached per (model, weight vector)."""
    cm = model.compiled
    cache = getattr(cm, "_optimum_cache", None)
    if cache is None:
        cache = cm._optimum_cache = {}
    key = np.asarray(w_star, dtype=float).tobytes()
    if key not in cache:
        try:
            cache[key] = infer_full(model, w_star, mode="auto").value
        except (EnumerationTooLarge, SweepUnsupported) as exc:
            raise RegretUnavailable(str(exc)) from exc
    return cache[key]


def compute_regret(model: ProblemModel, w_star, x: Configuration) -> float:
    """u*(x*) - u*(x); raises RegretUnavailable when exact full inference
    is out of reach rather than approximating."""
    best = optimum_value(model, np.asarray(w_star, dtype=float))
    reg = best - float(model.utility(np.asarray(w_star, dtype=float), x))
    if reg < -1e-6:
        raise InvariantViolation("negative_regret", {"regret": reg})
    return max(0.0, reg)


def compute_conditional_regret(model: ProblemModel, w_star, x: Configuration,
                               part: int) -> float:
    """Gap to the best single-part replacement with the rest fixed."""
    w_star = np.asarray(w_star, dtype=float)
    remainder = model.complement(x, part)
    objective = sorted(model.parts[part].features)
    res = infer_part(model, w_star, objective, part, remainder)
    creg = res.value - _restricted_value(model, w_star, objective, part, x)
    return max(0.0, creg)


def _restricted_value(model, w, objective, part, x: Configuration) -> float:
    fixed = np.full(model.num_vars, -1, dtype=np.int64)
    pv = set(model.parts[part].variables)
    for v in range(model.num_vars):
        if v not in pv:
            fixed[v] = model.code_of(v, x.values[v])
    rest = Restriction(model, model.parts[part].variables, fixed, objective, w)
    row = np.array([[model.code_of(v, x.values[v])
                     for v in model.parts[part].variables]], dtype=np.int64)
    return float(rest.values(row)[0])


def verify_trace_exact_rational(model: ProblemModel, w_star, trace,
                                initial: Configuration) -> int:
    """Replay a part-wise trace in exact rational arithmetic.

    Checks, with no floating-point tolerance at all, that every update
    moves the estimate toward the hidden weights by exactly the hidden
    gain on the updated coordinates, that untouched coordinates stay
    bitwise identical, and that the squared weight norm never exceeds
    4 D^2 S^2 t. Returns the number of verified steps.
    """
    from fractions import Fraction

    from .model import combine

    m = model.num_features
    w = [Fraction(0)] * m
    ws = [Fraction(float(v)) for v in w_star]
    D = Fraction(model.feature_bound)
    S = Fraction(model.part_feature_bound)
    x = initial
    for t, rec in enumerate(trace, start=1):
        if rec.part is None:
            raise ValueError("exact verification expects part-wise traces")
        remainder = model.complement(x, rec.part)
        x_t = model.total(combine(rec.recommended, remainder))
        x_hat = model.total(combine(rec.improvement, remainder))
        phi_t = model.feature_vector(x_t, exact=True)
        phi_hat = model.feature_vector(x_hat, exact=True)
        Q = rec.objective_I if rec.update_set == "I" else rec.objective_J
        before = list(w)
        gain = Fraction(0)
        if not rec.satisfied:
            for i in Q:
                w[i] += phi_hat[i] - phi_t[i]
                gain += ws[i] * (phi_hat[i] - phi_t[i])
        lhs = sum(ws[i] * (w[i] - before[i]) for i in range(m))
        if lhs != gain:
            raise InvariantViolation("exact_update_identity",
                                     {"t": t, "lhs": str(lhs), "rhs": str(gain)})
        touched = set(Q) if not rec.satisfied else set()
        for i in range(m):
            if i not in touched and w[i] != before[i]:
                raise InvariantViolation("exact_untouched_coordinate",
                                         {"t": t, "index": i})
        norm2 = sum(v * v for v in w)
        if norm2 > 4 * D * D * S * S * t:
            raise InvariantViolation("exact_norm_bound",
                                     {"t": t, "norm2": str(norm2)})
        x = x_t
    return len(trace)


def _pair_values(model, w, objective, part, remainder_codes, rec, imp):
    """Objective utilities of (recommended, improvement) given a remainder."""
    rest = Restriction(model, model.parts[part].variables, remainder_codes,
                       sorted(objective), w)
    rows = np.array(
        [[model.code_of(v, val) for v, val in zip(rec.variables, rec.values)],
         [model.code_of(v, val) for v, val in zip(imp.variables, imp.values)]],
        dtype=np.int64)
    vals = rest.values(rows)
    return float(vals[0]), float(vals[1])


# ---------------------------------------------------------------------------
# Per-user simulation


def _user_seed(config: ExperimentConfig, user_id: int) -> int:
    return (config.seed << 16) + user_id


def run_user_pcl(model: ProblemModel, config: ExperimentConfig,
                 user: SimulatedUser, decomposition=None) -> UserRun:
    dec = decomposition or decompose(model)
    strategy = make_strategy(config.selection, model, dec,
                             seed=_user_seed(config, user.user_id),
                             c=config.ucb_c)
    state = LearnerState.create(model, strategy, dec)
    provider = improvement_provider(user)
    D, S = model.feature_bound, model.part_feature_bound
    norm_w_star = float(np.linalg.norm(user.w_star))
    scale = max(1.0, norm_w_star * D * math.sqrt(model.num_features))

    best = None
    if config.compute_regret:
        try:
            best = optimum_value(model, user.w_star)
        except RegretUnavailable:
            best = None

    rows: list[MetricsRow] = []
    creg_sum = 0.0
    zeta_sum = 0.0
    cum_seconds = 0.0
    converged_at = None
    gains: list[float] = []
    for t in range(1, config.iterations + 1):
        x_prev = state.x
        w_prev = state.w.copy()
        rec = pcl_step(state, provider)
        part = rec.part
        remainder_codes = np.full(model.num_vars, -1, dtype=np.int64)
        pv = set(model.parts[part].variables)
        for v in range(model.num_vars):
            if v not in pv:
                remainder_codes[v] = model.code_of(v, state.x.values[v])

        # hidden-utility quantities
        I, J = rec.objective_I, rec.objective_J
        uI_rec, uI_hat = _pair_values(model, user.w_star, I, part,
                                      remainder_codes, rec.recommended,
                                      rec.improvement)
        gain = uI_hat - uI_rec
        gains.append(gain)
        opt = infer_part(model, user.w_star, sorted(I), part,
                         model.complement(state.x, part))
        creg = max(0.0, opt.value - uI_rec)
        zeta = 0.0
        if rec.update_set == "J":
            diff_set = sorted(set(I) - set(J))
            if diff_set:
                zd_rec, zd_hat = _pair_values(model, user.w_star, diff_set,
                                              part, remainder_codes,
                                              rec.recommended, rec.improvement)
                zeta = zd_hat - zd_rec
        rec.zeta = zeta
        rec.conditional_regret = creg
        creg_sum += creg
        zeta_sum += zeta
        cum_seconds += rec.inference_seconds
        bound = (2.0 * D * S * norm_w_star / (config.alpha * math.sqrt(t))
                 + zeta_sum / (config.alpha * t))

        if config.check_invariants:
            ctx = {"problem": model.metadata.get("kind"), "user": user.user_id,
                   "t": t, "part": model.parts[part].name}
            # update identity: <w*, w_new> - <w*, w_old> equals the hidden
            # gain on the updated coordinate set
            Q = I if rec.update_set == "I" else J
            uQ_rec, uQ_hat = _pair_values(model, user.w_star, Q, part,
                                          remainder_codes, rec.recommended,
                                          rec.improvement)
            lhs = float(user.w_star @ state.w - user.w_star @ w_prev)
            rhs = 0.0 if rec.satisfied else uQ_hat - uQ_rec
            if abs(lhs - rhs) > TOL * max(1.0, abs(rhs)) * scale:
                raise InvariantViolation("update_identity",
                                         {**ctx, "lhs": lhs, "rhs": rhs})
            nb = 4.0 * D * D * S * S * t
            if float(state.w @ state.w) > nb * (1 + 1e-12) + TOL:
                raise InvariantViolation("norm_bound",
                                         {**ctx, "norm2": float(state.w @ state.w),
                                          "bound": nb})
            if rec.est_gain_J > EPS:
                raise InvariantViolation("recommendation_not_J_optimal",
                                         {**ctx, "gain": rec.est_gain_J})
            if creg_sum / t > bound + TOL * scale:
                raise InvariantViolation("conditional_regret_bound",
                                         {**ctx, "avg_creg": creg_sum / t,
                                          "bound": bound})
            if gain < config.alpha * creg - TOL * scale:
                raise InvariantViolation("improvement_not_alpha_informative",
                                         {**ctx, "gain": gain, "creg": creg,
                                          "alpha": config.alpha})
            # inference never worsens its own objective given the remainder
            prev_rec = model.restrict(x_prev, [part])
            vJ_prev, vJ_new = _pair_values(model, w_prev, J, part,
                                           remainder_codes, prev_rec,
                                           rec.recommended)
            if vJ_new < vJ_prev - EPS:
                raise InvariantViolation("inference_regression",
                                         {**ctx, "previous": vJ_prev,
                                          "new": vJ_new})

        regret = None
        if best is not None:
            regret = max(0.0, best - float(model.utility(user.w_star, state.x)))
        rows.append(MetricsRow(
            user_id=user.user_id, t=t, part=model.parts[part].name,
            regret=regret, conditional_regret=creg, zeta=zeta,
            bound_value=bound, update_set=rec.update_set,
            satisfied=rec.satisfied,
            cumulative_inference_seconds=cum_seconds))

        if has_converged(state):
            converged_at = t
            if config.check_invariants:
                ok, witness = certify_local_optimum(model, user.w_star, state.x)
                if not ok:
                    raise InvariantViolation(
                        "converged_but_not_local_optimum",
                        {"user": user.user_id, "t": t,
                         "witness_part": model.parts[witness[0]].name})
            break

    return UserRun(user=user, rows=rows, converged_at=converged_at,
                   final=state.x, true_gains=gains, trace=state.trace)


def run_user_cl(model: ProblemModel, config: ExperimentConfig,
                user: SimulatedUser, gains=None) -> UserRun:
    strategy = make_strategy("random", model, decompose(model),
                             seed=_user_seed(config, user.user_id))
    state = LearnerState.create(model, strategy)
    if config.matched_gain:
        if gains is None:
            raise ValueError("matched_gain requires paired gains")
        provider = matched_gain_provider(user, gains)
    else:
        provider = full_improvement_provider(user)

    best = None
    if config.compute_regret:
        try:
            best = optimum_value(model, user.w_star)
        except RegretUnavailable:
            best = None

    rows: list[MetricsRow] = []
    cum_seconds = 0.0
    converged_at = None
    for t in range(1, config.iterations + 1):
        rec = cl_step(state, provider)
        cum_seconds += rec.inference_seconds
        regret = None
        if best is not None:
            regret = max(0.0, best - float(model.utility(user.w_star, state.x)))
        rows.append(MetricsRow(
            user_id=user.user_id, t=t, part="all", regret=regret,
            conditional_regret=None, zeta=None, bound_value=None,
            update_set=rec.update_set, satisfied=rec.satisfied,
            cumulative_inference_seconds=cum_seconds))
        if has_converged(state):
            converged_at = t
            break
    return UserRun(user=user, rows=rows, converged_at=converged_at,
                   final=state.x, true_gains=[], trace=state.trace)


# ---------------------------------------------------------------------------
# Experiment orchestration and outputs


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[UserRun]

    def series(self, column: str) -> np.ndarray:
        """(users, T) matrix; rows of converged users extend their last value."""
        T = self.config.iterations
        out = np.full((len(self.runs), T), np.nan)
        for i, run in enumerate(self.runs):
            last = np.nan
            for t in range(T):
                if t < len(run.rows):
                    v = getattr(run.rows[t], column)
                    if v is not None:
                        last = v
                out[i, t] = last
        return out

    def aggregate(self) -> dict:
        reg = self.series("regret")
        rt = self.series("cumulative_inference_seconds")
        with np.errstate(all="ignore"):
            return {
                "t": list(range(1, self.config.iterations + 1)),
                "regret_mean": _clean(np.nanmean(reg, axis=0)),
                "regret_std": _clean(np.nanstd(reg, axis=0)),
                "regret_median": _clean(np.nanmedian(reg, axis=0)),
                "runtime_mean": _clean(np.nanmean(rt, axis=0)),
                "runtime_std": _clean(np.nanstd(rt, axis=0)),
            }


def _clean(arr) -> list:
    return [None if not np.isfinite(v) else float(v) for v in arr]


def run_experiment(model: ProblemModel, config: ExperimentConfig,
                   ) -> ExperimentResult:
    config.validate()
    users = sample_users(model, config.users, config.seed, config.alpha)
    dec = decompose(model)
    runs = []
    for user in users:
        if config.algorithm == "pcl":
            runs.append(run_user_pcl(model, config, user, dec))
        else:
            gains = None
            if config.matched_gain:
                gains = run_user_pcl(model, config, user, dec).true_gains
            runs.append(run_user_cl(model, config, user, gains=gains))
    result = ExperimentResult(config=config, runs=runs)
    if config.out_dir:
        emit_outputs(result, Path(config.out_dir))
    return result


#: Deterministic columns only: wall-clock timing lives in the plot JSON,
#: so identical (seed, config) runs produce byte-identical CSVs.
CSV_COLUMNS = ("algorithm", "user_id", "t", "part", "regret",
               "conditional_regret", "zeta", "bound_value", "update_set",
               "satisfied")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_name(config: ExperimentConfig) -> str:
    tag = config.algorithm
    if config.matched_gain:
        tag += "-matched"
    return (f"{Path(config.problem).stem}_{tag}_a{config.alpha}"
            f"_{config.selection}_seed{config.seed}")


def emit_outputs(result: ExperimentResult, out_dir: Path) -> tuple[Path, Path]:
    """Per-iteration CSV plus plot-ready JSON (regret and runtime panels)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = run_name(result.config)
    csv_path = out_dir / f"{name}.csv"
    lines = [",".join(CSV_COLUMNS)]
    for run in result.runs:
        for row in run.rows:
            lines.append(",".join(_fmt(v) for v in (
                result.config.algorithm, row.user_id, row.t, row.part,
                row.regret, row.conditional_regret, row.zeta, row.bound_value,
                row.update_set, row.satisfied)))
    csv_path.write_text("\n".join(lines) + "\n")

    agg = result.aggregate()
    plot_path = out_dir / f"{name}.plot.json"
    plot_path.write_text(json.dumps({
        "problem": result.config.problem,
        "algorithm": result.config.algorithm,
        "matched_gain": result.config.matched_gain,
        "alpha": result.config.alpha,
        "selection": result.config.selection,
        "seed": result.config.seed,
        "users": result.config.users,
        "panels": {
            "regret": {k: agg[k] for k in
                       ("t", "regret_mean", "regret_std", "regret_median")},
            "runtime": {k: agg[k] for k in
                        ("t", "runtime_mean", "runtime_std")},
        },
        "converged_at": [r.converged_at for r in result.runs],
    }, sort_keys=True, indent=1))
    return csv_path, plot_path

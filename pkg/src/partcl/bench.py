"""Benchmark of the evaluation kernels: numba against the numpy fallback.

Workloads mirror the package's hot paths: feature-matrix evaluation and
constraint checking over batches of candidate configurations for each
shipped benchmark problem. Both backends are importable side by side, so
the comparison runs in one process regardless of PARTCL_BACKEND.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .problems import BUILDERS


def _random_rows(model, rows: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    sizes = np.array([len(v.domain) for v in model.variables])
    return (rng.integers(0, sizes, size=(rows, model.num_vars))
            .astype(np.int64))


def _time(fn, args, repeats: int) -> float:
    fn(*args)  # warm-up (and JIT compilation for numba)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(rows: int = 20000, repeats: int = 5) -> list[dict]:
    results = []
    backends = [("numpy", kernels._phi_numpy, kernels._feasible_numpy)]
    if kernels.NUMBA_AVAILABLE:
        backends.append(("numba", kernels._phi_numba, kernels._feasible_numba))
    else:
        print("numba unavailable; benchmarking the numpy fallback only")

    for name, builder in sorted(BUILDERS.items()):
        model = builder()
        cm = model.compiled
        codes = _random_rows(model, rows, seed=7)
        fa, ca = cm.features, cm.constraints
        phi_args = (codes, fa.f_const, fa.trans, fa.thresh,
                    fa.u_feat, fa.u_var, fa.u_off, fa.u_tab,
                    fa.t_feat, fa.t_coef, fa.t_off,
                    fa.l_var, fa.l_code, fa.l_neg)
        con_args = (codes, ca.c_const, ca.c_op, ca.c_bound,
                    ca.cc_off, ca.cc_var, ca.cc_code, ca.cc_neg,
                    ca.ce_off, ca.ce_var, ca.ce_toff, ca.ce_tab)
        row = {"problem": name, "rows": rows,
               "features": model.num_features,
               "constraints": len(model.hard_constraints)}
        for bname, phi_fn, feas_fn in backends:
            row[f"phi_{bname}_s"] = _time(phi_fn, phi_args, repeats)
            if ca.names:
                row[f"feasible_{bname}_s"] = _time(feas_fn, con_args, repeats)
        results.append(row)

    header = f"{'problem':<10} {'rows':>7} {'m':>4} " \
             f"{'phi numpy':>11} {'phi numba':>11} {'speedup':>8} " \
             f"{'feas numpy':>11} {'feas numba':>11}"
    print(header)
    print("-" * len(header))
    for r in results:
        pn = r.get("phi_numpy_s", float("nan"))
        pb = r.get("phi_numba_s", float("nan"))
        fn_ = r.get("feasible_numpy_s", float("nan"))
        fb = r.get("feasible_numba_s", float("nan"))
        speed = pn / pb if pb and pb == pb else float("nan")
        print(f"{r['problem']:<10} {r['rows']:>7} {r['features']:>4} "
              f"{pn:>11.4f} {pb:>11.4f} {speed:>7.1f}x "
              f"{fn_:>11.4f} {fb:>11.4f}")
    return results


if __name__ == "__main__":
    run_bench()

"""Batch evaluation kernels.

The hot loops of this package evaluate feature vectors and constraint
checks over batches of candidate assignments. Two implementations are
provided: numba-jitted row loops and a vectorized pure-numpy fallback.
The backend is chosen once at import time from the PARTCL_BACKEND
environment variable ("numba" by default, "numpy" to force the fallback).

Both backends accumulate contributions in the same order, so they produce
bit-identical feature matrices.
"""

from __future__ import annotations

import os

import numpy as np

from .model import EPS

_requested = os.environ.get("PARTCL_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise RuntimeError(
        f"PARTCL_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

NUMBA_AVAILABLE = False
if _requested == "numba":
    try:
        from numba import njit

        NUMBA_AVAILABLE = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_AVAILABLE = False


def active_backend() -> str:
    return "numba" if NUMBA_AVAILABLE else "numpy"


# ---------------------------------------------------------------------------
# Feature evaluation
#
# Features are stored flat:
#   f_const[f]           additive constant (from restricted fixed variables)
#   trans[f]             0 identity, 1 signed (2e-1), 2 hinge (max(0, e-thr))
#   u_*                  per-(feature, variable) lookup-table entries
#   t_* / l_*            multi-literal conjunction terms and their literals


def _phi_numpy(codes, f_const, trans, thresh,
               u_feat, u_var, u_off, u_tab,
               t_feat, t_coef, t_off, l_var, l_code, l_neg):
    n = codes.shape[0]
    phi = np.repeat(f_const[None, :], n, axis=0)
    for k in range(u_feat.size):
        phi[:, u_feat[k]] += u_tab[u_off[k] + codes[:, u_var[k]]]
    for t in range(t_feat.size):
        ok = np.ones(n, dtype=bool)
        for li in range(t_off[t], t_off[t + 1]):
            hit = codes[:, l_var[li]] == l_code[li]
            if l_neg[li]:
                hit = ~hit
            ok &= hit
        phi[:, t_feat[t]] += t_coef[t] * ok
    for f in range(trans.size):
        if trans[f] == 1:
            phi[:, f] = 2.0 * phi[:, f] - 1.0
        elif trans[f] == 2:
            phi[:, f] = np.maximum(0.0, phi[:, f] - thresh[f])
    return phi


def _phi_loops(codes, f_const, trans, thresh,
               u_feat, u_var, u_off, u_tab,
               t_feat, t_coef, t_off, l_var, l_code, l_neg):
    n = codes.shape[0]
    nf = f_const.size
    phi = np.empty((n, nf))
    for r in range(n):
        for f in range(nf):
            phi[r, f] = f_const[f]
        for k in range(u_feat.size):
            phi[r, u_feat[k]] += u_tab[u_off[k] + codes[r, u_var[k]]]
        for t in range(t_feat.size):
            ok = 1.0
            for li in range(t_off[t], t_off[t + 1]):
                hit = codes[r, l_var[li]] == l_code[li]
                if l_neg[li] != 0:
                    hit = not hit
                if not hit:
                    ok = 0.0
                    break
            phi[r, t_feat[t]] += t_coef[t] * ok
        for f in range(nf):
            if trans[f] == 1:
                phi[r, f] = 2.0 * phi[r, f] - 1.0
            elif trans[f] == 2:
                v = phi[r, f] - thresh[f]
                phi[r, f] = v if v > 0.0 else 0.0
    return phi


# ---------------------------------------------------------------------------
# Constraint checking
#
#   cc_*                 condition literals per constraint (conjunction)
#   ce_*                 lookup-table entries of the linear expression
#   c_op[c]              0 "<=", 1 ">=", 2 "=="


def _feasible_numpy(codes, c_const, c_op, c_bound,
                    cc_off, cc_var, cc_code, cc_neg,
                    ce_off, ce_var, ce_toff, ce_tab):
    n = codes.shape[0]
    ok_all = np.ones(n, dtype=bool)
    for c in range(c_const.size):
        active = np.ones(n, dtype=bool)
        for li in range(cc_off[c], cc_off[c + 1]):
            hit = codes[:, cc_var[li]] == cc_code[li]
            if cc_neg[li]:
                hit = ~hit
            active &= hit
        lhs = np.full(n, c_const[c])
        for k in range(ce_off[c], ce_off[c + 1]):
            lhs += ce_tab[ce_toff[k] + codes[:, ce_var[k]]]
        if c_op[c] == 0:
            sat = lhs <= c_bound[c] + EPS
        elif c_op[c] == 1:
            sat = lhs >= c_bound[c] - EPS
        else:
            sat = np.abs(lhs - c_bound[c]) <= EPS
        ok_all &= ~active | sat
    return ok_all


def _feasible_loops(codes, c_const, c_op, c_bound,
                    cc_off, cc_var, cc_code, cc_neg,
                    ce_off, ce_var, ce_toff, ce_tab):
    n = codes.shape[0]
    out = np.ones(n, dtype=np.bool_)
    for r in range(n):
        for c in range(c_const.size):
            active = True
            for li in range(cc_off[c], cc_off[c + 1]):
                hit = codes[r, cc_var[li]] == cc_code[li]
                if cc_neg[li] != 0:
                    hit = not hit
                if not hit:
                    active = False
                    break
            if not active:
                continue
            lhs = c_const[c]
            for k in range(ce_off[c], ce_off[c + 1]):
                lhs += ce_tab[ce_toff[k] + codes[r, ce_var[k]]]
            if c_op[c] == 0:
                sat = lhs <= c_bound[c] + EPS
            elif c_op[c] == 1:
                sat = lhs >= c_bound[c] - EPS
            else:
                sat = abs(lhs - c_bound[c]) <= EPS
            if not sat:
                out[r] = False
                break
    return out


if NUMBA_AVAILABLE:
    _phi_numba = njit(cache=True, nogil=True)(_phi_loops)
    _feasible_numba = njit(cache=True, nogil=True)(_feasible_loops)
    phi_batch = _phi_numba
    feasible_batch = _feasible_numba
else:
    phi_batch = _phi_numpy
    feasible_batch = _feasible_numpy

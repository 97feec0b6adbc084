"""Synthetic spin-glass-style grid benchmark.

A 4x4 grid of binary cells; every edge between adjacent cells carries a
signed disagreement feature (+1 if the endpoints differ, -1 if they are
equal). Parts are the four non-overlapping 2x2 blocks. Variables are
declared block by block so the parts are contiguous in variable order.
"""

from __future__ import annotations

from ..model import FeatureDef, BasicPart, Literal, ProblemModel, Term, Variable

ROWS = COLS = 4
BLOCK = 2


def _blocks():
    for br in range(0, ROWS, BLOCK):
        for bc in range(0, COLS, BLOCK):
            cells = [(br + r, bc + c) for r in range(BLOCK) for c in range(BLOCK)]
            yield f"b{br // BLOCK}{bc // BLOCK}", cells


def build_grid() -> ProblemModel:
    cell_to_var: dict[tuple[int, int], int] = {}
    variables = []
    parts = []
    for pid, (name, cells) in enumerate(_blocks()):
        var_ids = []
        for (r, c) in cells:
            cell_to_var[(r, c)] = len(variables)
            var_ids.append(len(variables))
            variables.append(Variable(name=f"n{r}{c}", domain=(0, 1)))
        parts.append(BasicPart(index=pid, name=name, variables=tuple(var_ids)))

    features = []
    for r in range(ROWS):
        for c in range(COLS):
            for (r2, c2) in ((r, c + 1), (r + 1, c)):
                if r2 >= ROWS or c2 >= COLS:
                    continue
                a, b = cell_to_var[(r, c)], cell_to_var[(r2, c2)]
                features.append(FeatureDef(
                    index=len(features),
                    name=f"edge_r{r}c{c}_r{r2}c{c2}",
                    terms=(
                        Term(1.0, (Literal(a, 0), Literal(b, 1))),
                        Term(1.0, (Literal(a, 1), Literal(b, 0))),
                    ),
                    transform="signed",
                ))

    metadata = {
        "kind": "grid",
        "rows": ROWS,
        "cols": COLS,
        "cells": {f"n{r}{c}": [r, c] for r in range(ROWS) for c in range(COLS)},
    }
    return ProblemModel.build(variables, features, parts, (), metadata)

"""JSON problem files: schema, loader, and writer.

The loader resolves variable names to indices and validates the full set
of model invariants, rejecting bad documents with path-addressed errors.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import (BasicPart, Configuration, Constraint, FeatureDef,
                    LinearTerm, Literal, ModelError, ProblemModel, TableTerm,
                    Term, Variable)

FORMAT = "partcl-problem"
VERSION = 1


def model_to_json(model: ProblemModel) -> dict:
    def lit(l: Literal) -> dict:
        d = {"var": model.variables[l.var].name, "value": l.value}
        if l.negate:
            d["negate"] = True
        return d

    return {
        "format": FORMAT,
        "version": VERSION,
        "metadata": model.metadata,
        "variables": [{"name": v.name, "domain": list(v.domain)}
                      for v in model.variables],
        "features": [
            {
                "name": f.name,
                "transform": f.transform,
                **({"threshold": f.threshold} if f.transform == "hinge" else {}),
                "terms": [{"coef": t.coef, "literals": [lit(l) for l in t.literals]}
                          for t in f.terms],
                "linear": [{"var": model.variables[lt.var].name, "coef": lt.coef}
                           for lt in f.linear],
            }
            for f in model.features
        ],
        "constraints": [
            {
                "name": c.name,
                "op": c.op,
                "bound": c.bound,
                "condition": [lit(l) for l in c.condition],
                "tables": [
                    {"var": model.variables[t.var].name,
                     "table": {str(val): t.table[i]
                               for i, val in enumerate(model.variables[t.var].domain)}}
                    for t in c.tables
                ],
            }
            for c in model.hard_constraints
        ],
        "parts": [{"name": p.name,
                   "variables": [model.variables[v].name for v in p.variables]}
                  for p in model.parts],
    }


def model_from_json(doc: dict) -> ProblemModel:
    if doc.get("format") != FORMAT:
        raise ModelError("format", f"expected {FORMAT!r}")
    if doc.get("version") != VERSION:
        raise ModelError("version", f"unsupported version {doc.get('version')!r}")

    var_index: dict[str, int] = {}
    variables = []
    for i, v in enumerate(doc.get("variables", [])):
        name = v.get("name")
        if not isinstance(name, str):
            raise ModelError(f"variables[{i}].name", "must be a string")
        if name in var_index:
            raise ModelError(f"variables[{i}].name", f"duplicate {name!r}")
        var_index[name] = i
        dom = v.get("domain")
        if not isinstance(dom, list) or not all(isinstance(x, int) for x in dom):
            raise ModelError(f"variables[{i}].domain", "must be a list of integers")
        variables.append(Variable(name=name, domain=tuple(dom)))

    def resolve(path: str, name) -> int:
        if name not in var_index:
            raise ModelError(path, f"unknown variable {name!r}")
        return var_index[name]

    def literal(path: str, d: dict) -> Literal:
        return Literal(var=resolve(f"{path}.var", d.get("var")),
                       value=int(d.get("value")),
                       negate=bool(d.get("negate", False)))

    features = []
    for i, f in enumerate(doc.get("features", [])):
        path = f"features[{i}]"
        terms = tuple(
            Term(float(t.get("coef", 1.0)),
                 tuple(literal(f"{path}.terms[{j}].literals[{k}]", l)
                       for k, l in enumerate(t.get("literals", []))))
            for j, t in enumerate(f.get("terms", []))
        )
        linear = tuple(
            LinearTerm(float(lt.get("coef", 1.0)),
                       resolve(f"{path}.linear[{j}].var", lt.get("var")))
            for j, lt in enumerate(f.get("linear", []))
        )
        features.append(FeatureDef(
            index=i, name=str(f.get("name", f"f{i}")), terms=terms,
            linear=linear, transform=str(f.get("transform", "identity")),
            threshold=float(f.get("threshold", 0.0))))

    constraints = []
    for i, c in enumerate(doc.get("constraints", [])):
        path = f"constraints[{i}]"
        tables = []
        for j, t in enumerate(c.get("tables", [])):
            var = resolve(f"{path}.tables[{j}].var", t.get("var"))
            mapping = t.get("table", {})
            dom = variables[var].domain
            for key in mapping:
                if int(key) not in dom:
                    raise ModelError(f"{path}.tables[{j}].table",
                                     f"value {key} not in domain")
            tables.append(TableTerm.from_mapping(
                var, dom, {int(k): float(v) for k, v in mapping.items()}))
        constraints.append(Constraint(
            name=str(c.get("name", f"c{i}")), tables=tuple(tables),
            op=str(c.get("op", "<=")), bound=float(c.get("bound", 0.0)),
            condition=tuple(literal(f"{path}.condition[{k}]", l)
                            for k, l in enumerate(c.get("condition", [])))))

    parts = []
    for i, p in enumerate(doc.get("parts", [])):
        path = f"parts[{i}]"
        ids = tuple(sorted(resolve(f"{path}.variables[{j}]", name)
                           for j, name in enumerate(p.get("variables", []))))
        parts.append(BasicPart(index=i, name=str(p.get("name", f"p{i}")),
                               variables=ids))

    return ProblemModel.build(variables, features, parts, constraints,
                              doc.get("metadata", {}))


def save_problem(model: ProblemModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=2,
                                     sort_keys=True))


def load_problem(path) -> ProblemModel:
    return model_from_json(json.loads(Path(path).read_text()))


def load_configuration(model: ProblemModel, doc) -> Configuration:
    """Configuration from {"values": [...]} or {"assignment": {name: value}}."""
    if isinstance(doc, (str, Path)):
        doc = json.loads(Path(doc).read_text())
    if "values" in doc:
        values = tuple(int(v) for v in doc["values"])
    elif "assignment" in doc:
        assignment = doc["assignment"]
        values = []
        for v in model.variables:
            if v.name not in assignment:
                raise ModelError(f"assignment.{v.name}", "missing variable")
            values.append(int(assignment[v.name]))
        values = tuple(values)
    else:
        raise ModelError("configuration", "need 'values' or 'assignment'")
    model.check_values(values)
    return Configuration(values)

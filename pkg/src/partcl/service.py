"""Turn-based HTTP API for live elicitation sessions.

A session wraps one learner over one problem; a human plays the
improvement role. Turns are strictly serialized per session: the pending
recommendation stays fixed until an improvement for it is accepted, and a
second in-flight submission is rejected as a conflict. Sessions journal
to append-only JSON-lines files and are replayed on restart (all learner
steps are deterministic given the journal).
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .gai import GaiNetwork, build_gai_network, decompose
from .inference import certify_local_optimum
from .learner import (LearnerState, PendingTurn, apply_improvement,
                      has_converged, propose_turn)
from .model import (Configuration, InfeasibleError, ModelError,
                    PartialConfiguration, ProblemModel)
from .problems import BUILDERS
from .selection import make_strategy

AWAITING = "awaiting-improvement"
INFERRING = "inferring"
CONVERGED = "converged"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or []
        super().__init__(message)


@dataclass
class SessionRecord:
    session_id: str
    problem_id: str
    model: ProblemModel
    network: GaiNetwork
    state: LearnerState
    options: dict
    phase: str = INFERRING
    pending: PendingTurn | None = None
    events: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    journal: Path | None = None
    globals_cache: list = field(default_factory=list)

    def log(self, event: dict) -> None:
        self.events.append(event)
        if self.journal is not None:
            with open(self.journal, "a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")


def _global_features(model: ProblemModel) -> list[int]:
    """Features whose scope spans three or more parts; their current
    values are always summarized rather than shown via raw variables."""
    part_of = {}
    for p in model.parts:
        for v in p.variables:
            part_of[v] = p.index
    out = []
    for f in model.features:
        if len({part_of[v] for v in f.scope}) >= 3:
            out.append(f.index)
    return out


def context_summary(model: ProblemModel, network: GaiNetwork,
                    config: Configuration, part: int,
                    global_ids: list[int]) -> dict:
    neighbors = {}
    for q in network.neighbors(part):
        qp = model.parts[q]
        neighbors[qp.name] = {model.variables[v].name: config.values[v]
                              for v in qp.variables}
    summaries = {}
    for fi in global_ids:
        f = model.features[fi]
        summaries[f.name] = float(f.value(config.values))
    gauges = []
    for g in model.metadata.get("gauges", []):
        f = model.feature_by_name(g["feature"])
        gauges.append({
            "label": g["label"],
            "value": float(f.value(config.values)) * float(g.get("scale", 1.0)),
            "unit": g.get("unit", ""),
        })
    return {"neighbors": neighbors, "global_summaries": summaries,
            "gauges": gauges}


class SessionStore:
    def __init__(self, journal_dir: str | None = None,
                 problems: dict[str, ProblemModel] | None = None):
        self.journal_dir = Path(journal_dir) if journal_dir else None
        if self.journal_dir:
            self.journal_dir.mkdir(parents=True, exist_ok=True)
        self._problems: dict[str, ProblemModel] = dict(problems or {})
        self.sessions: dict[str, SessionRecord] = {}
        if self.journal_dir:
            self._restore_all()

    def problem(self, problem_id: str) -> ProblemModel:
        if problem_id not in self._problems:
            if problem_id in BUILDERS:
                self._problems[problem_id] = BUILDERS[problem_id]()
            else:
                raise ApiError(404, "unknown_problem",
                               f"unknown problem {problem_id!r}")
        return self._problems[problem_id]

    def catalog(self) -> list[dict]:
        ids = sorted(set(self._problems) | set(BUILDERS))
        out = []
        for pid in ids:
            model = self.problem(pid)
            out.append({
                "id": pid,
                "kind": model.metadata.get("kind", pid),
                "variables": model.num_vars,
                "features": model.num_features,
                "parts": [p.name for p in model.parts],
                "metadata": model.metadata,
            })
        return out

    # -- lifecycle -----------------------------------------------------------

    def _new_state(self, model: ProblemModel, options: dict) -> LearnerState:
        dec = decompose(model)
        strategy = make_strategy(options.get("selection", "smallest"),
                                 model, dec, seed=int(options.get("seed", 0)))
        initial = None
        if options.get("initial"):
            initial = _configuration_from_assignment(model, options["initial"])
        try:
            return LearnerState.create(model, strategy, dec, initial=initial)
        except InfeasibleError as exc:
            raise ApiError(422, "infeasible_initial",
                           "initial configuration violates hard constraints",
                           details=exc.violated) from exc

    def create(self, problem_id: str, options: dict | None = None,
               session_id: str | None = None, journal: bool = True,
               ) -> SessionRecord:
        options = dict(options or {})
        model = self.problem(problem_id)
        state = self._new_state(model, options)
        sid = session_id or uuid.uuid4().hex[:12]
        rec = SessionRecord(
            session_id=sid, problem_id=problem_id, model=model,
            network=build_gai_network(model), state=state, options=options)
        rec.globals_cache = _global_features(model)
        if journal and self.journal_dir:
            rec.journal = self.journal_dir / f"{sid}.jsonl"
        rec.log({"event": "created", "problem": problem_id,
                 "options": options, "session_id": sid})
        self._advance(rec)
        self.sessions[sid] = rec
        return rec

    def get(self, session_id: str) -> SessionRecord:
        if session_id not in self.sessions:
            raise ApiError(404, "unknown_session",
                           f"unknown session {session_id!r}")
        return self.sessions[session_id]

    def delete(self, session_id: str) -> None:
        rec = self.get(session_id)
        rec.log({"event": "deleted"})
        del self.sessions[session_id]

    def _advance(self, rec: SessionRecord) -> None:
        """Prepare the next recommendation, or park the session once the
        stopping rule fires."""
        if has_converged(rec.state):
            rec.phase = CONVERGED
            rec.pending = None
            return
        rec.phase = INFERRING
        rec.pending = propose_turn(rec.state)
        rec.phase = AWAITING

    def submit(self, rec: SessionRecord, assignment: dict) -> dict:
        if not rec.lock.acquire(blocking=False):
            raise ApiError(409, "conflict",
                           "another improvement for this session is in flight")
        try:
            if rec.phase == CONVERGED:
                raise ApiError(409, "converged", "session has converged")
            if rec.phase != AWAITING or rec.pending is None:
                raise ApiError(409, "not_ready", "no pending recommendation")
            pending = rec.pending
            improvement = _partial_from_assignment(
                rec.model, pending.part, assignment)
            try:
                record = apply_improvement(rec.state, pending, improvement)
            except InfeasibleError as exc:
                raise ApiError(422, "infeasible",
                               "improvement violates hard constraints",
                               details=exc.violated) from exc
            except ValueError as exc:
                raise ApiError(422, "protocol", str(exc)) from exc
            rec.log({"event": "turn",
                     "improvement": _assignment_dict(rec.model, improvement)})
            self._advance(rec)
            return {
                "accepted": True,
                "t": record.t,
                "satisfied": record.satisfied,
                "update_set": record.update_set,
                "converged": rec.phase == CONVERGED,
                "phase": rec.phase,
                "clean_streak": _clean_streak(rec.state),
            }
        finally:
            rec.lock.release()

    # -- persistence ---------------------------------------------------------

    def _restore_all(self) -> None:
        for path in sorted(self.journal_dir.glob("*.jsonl")):
            events = [json.loads(line) for line in
                      path.read_text().splitlines() if line.strip()]
            if not events or events[0].get("event") != "created":
                continue
            if any(e.get("event") == "deleted" for e in events):
                continue
            head = events[0]
            rec = self.create(head["problem"], head.get("options"),
                              session_id=head["session_id"], journal=False)
            rec.journal = None  # replay without re-journaling
            for e in events[1:]:
                if e.get("event") != "turn":
                    continue
                improvement = _partial_from_assignment(
                    rec.model, rec.pending.part, e["improvement"])
                apply_improvement(rec.state, rec.pending, improvement)
                self._advance(rec)
            rec.journal = path
            rec.events = events


def _configuration_from_assignment(model: ProblemModel,
                                   assignment: dict) -> Configuration:
    values = []
    for v in model.variables:
        if v.name not in assignment:
            raise ApiError(422, "protocol",
                           f"initial configuration misses {v.name!r}")
        values.append(int(assignment[v.name]))
    try:
        model.check_values(values)
    except ModelError as exc:
        raise ApiError(422, "protocol", str(exc)) from exc
    return Configuration(tuple(values))


def _partial_from_assignment(model: ProblemModel, part: int,
                             assignment: dict) -> PartialConfiguration:
    p = model.parts[part]
    expected = {model.variables[v].name for v in p.variables}
    got = set(assignment)
    if got != expected:
        raise ApiError(422, "protocol",
                       "improvement must assign exactly the recommended "
                       f"part's variables {sorted(expected)}",
                       details=sorted(got.symmetric_difference(expected)))
    values = []
    for v in p.variables:
        val = int(assignment[model.variables[v].name])
        if val not in model.variables[v].domain:
            raise ApiError(422, "protocol",
                           f"value {val} outside the domain of "
                           f"{model.variables[v].name!r}")
        values.append(val)
    return PartialConfiguration(frozenset({part}), tuple(p.variables),
                                tuple(values))


def _assignment_dict(model: ProblemModel,
                     partial: PartialConfiguration) -> dict:
    return {model.variables[v].name: int(val)
            for v, val in zip(partial.variables, partial.values)}


def _clean_streak(state: LearnerState) -> int:
    streak = 0
    for _p, sat, stable in reversed(state.recent_visits):
        if not (sat and stable):
            break
        streak += 1
    return streak


def create_app(journal_dir: str | None = None,
               problems: dict[str, ProblemModel] | None = None,
               static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="partcl session service")
    store = SessionStore(journal_dir=journal_dir, problems=problems)
    app.state.store = store

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message,
                                     "details": exc.details})

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(store.sessions)}

    @app.get("/problems")
    def problems_endpoint():
        return store.catalog()

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        problem_id = body.get("problem")
        if not problem_id:
            raise ApiError(422, "protocol", "body must name a 'problem'")
        rec = store.create(problem_id, body.get("options"))
        return _state_payload(rec)

    @app.get("/sessions/{session_id}/recommendation")
    def recommendation(session_id: str):
        rec = store.get(session_id)
        if rec.phase == CONVERGED:
            return {"phase": CONVERGED, "t": rec.state.t - 1,
                    "final": _config_dict(rec.model, rec.state.x)}
        pending = rec.pending
        part = rec.model.parts[pending.part]
        return {
            "phase": rec.phase,
            "t": rec.state.t,
            "part": pending.part,
            "part_name": part.name,
            "assignment": _assignment_dict(rec.model, pending.recommended),
            "context": context_summary(rec.model, rec.network, pending.config,
                                       pending.part, rec.globals_cache),
        }

    @app.post("/sessions/{session_id}/improvement")
    def improvement(session_id: str, body: dict):
        rec = store.get(session_id)
        assignment = body.get("assignment")
        if not isinstance(assignment, dict):
            raise ApiError(422, "protocol", "body must carry 'assignment'")
        return store.submit(rec, assignment)

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        return _state_payload(store.get(session_id))

    @app.delete("/sessions/{session_id}")
    def delete(session_id: str):
        store.delete(session_id)
        return {"deleted": session_id}

    return app


def _config_dict(model: ProblemModel, x: Configuration) -> dict:
    return {model.variables[v].name: int(val)
            for v, val in enumerate(x.values)}


def _state_payload(rec: SessionRecord) -> dict:
    state = rec.state
    payload = {
        "session_id": rec.session_id,
        "problem": rec.problem_id,
        "phase": rec.phase,
        "t": state.t,
        "weights": [float(v) for v in state.w],
        "x": _config_dict(rec.model, state.x),
        "clean_streak": _clean_streak(state),
        "trace": [r.to_json(rec.model) for r in state.trace],
    }
    if rec.phase == AWAITING and rec.pending is not None:
        payload["pending_part"] = rec.model.parts[rec.pending.part].name
    if rec.phase == CONVERGED:
        ok, _witness = certify_local_optimum(rec.model, state.w, state.x)
        payload["locally_optimal_under_learned_weights"] = bool(ok)
    return payload

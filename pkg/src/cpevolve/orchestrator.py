"""The evolution loop around the Critical Part.

Each iteration picks parents from a small elite pool, asks the chat backend
for a mutated and a crossed-over version of their code, scores whatever comes
back in the sandbox and greedily inserts successes into the pool.

Run directory layout::

    history.jsonl      every seed, attempt, operation and iteration record (append-only)
    state.json         pool + RNG + replay cursor after the last finished iteration
    pool.json          the current pool, deterministic bytes
    {id}.py            code of every scored candidate
    {id}_{kind}.png    visual artifacts of pool entrants
"""
from __future__ import annotations

import bisect
import json
import logging
import math
import random
import re
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, NamedTuple, Sequence

from . import sandbox
from .errors import (
    BackendUnreachable,
    EmptyCode,
    Oversized,
    ParentCountMismatch,
    ReplayExhausted,
    TemplateMissing,
    UnscoredCandidate,
)
from .llm import Backend, ChatRequest, LiveBackend, NullBackend, ReplayBackend, image_part, text_part
from .placement import PlacementProblem, synthetic_problem
from .tsp import TspInstance, bundled_best_known, bundled_instance, load_instance
from .visual import TSP_KINDS, render_artifact

log = logging.getLogger(__name__)

OP_KINDS = ("seed", "mutation", "crossover")
TASKS = ("tsp", "step")
BACKENDS = ("live", "replay", "null")
MAX_ATTEMPTS = 5
MAX_CODE_BYTES = 64 * 1024
IMAGE_KINDS = {"tsp": TSP_KINDS, "step": ("placement",)}


@dataclass
class Candidate:
    id: str
    code: str
    score: float | None = None  # None marks a failed evaluation
    parents: list[str] = field(default_factory=list)
    op_kind: str = "seed"
    generation: int = 0
    artifacts: list[str] = field(default_factory=list)
    attempts_used: int = 1

    def __post_init__(self):
        if self.op_kind not in OP_KINDS:
            raise ValueError(f"unknown op_kind {self.op_kind!r}")
        if (self.op_kind == "crossover") != (len(self.parents) == 2) or len(self.parents) > 2:
            raise ValueError(f"{self.op_kind} candidate cannot have {len(self.parents)} parents")
        if not 1 <= self.attempts_used <= MAX_ATTEMPTS:
            raise ValueError(f"attempts_used must be in 1..{MAX_ATTEMPTS}")

    @property
    def scored(self) -> bool:
        return self.score is not None and math.isfinite(self.score)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Candidate":
        return cls(**{f.name: doc[f.name] for f in fields(cls) if f.name in doc})


@dataclass
class Pool:
    capacity: int = 5
    members: list[Candidate] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("pool capacity must be >= 1")

    def __len__(self) -> int:
        return len(self.members)

    @property
    def best(self) -> Candidate:
        return self.members[0]

    def scores(self) -> list[float]:
        return [c.score for c in self.members]

    def insert(self, cand: Candidate) -> tuple[bool, Candidate | None]:
        """Greedy insertion; returns (inserted, evicted member)."""
        if not cand.scored:
            raise UnscoredCandidate(f"candidate {cand.id} has no real score")
        evicted = None
        if len(self.members) >= self.capacity:
            # ties keep the incumbent
            if not cand.score < self.members[-1].score:
                return False, None
            evicted = self.members.pop()
        pos = bisect.bisect_right(self.scores(), cand.score)
        self.members.insert(pos, cand)
        return True, evicted

    def to_json(self) -> str:
        doc = {"capacity": self.capacity, "members": [c.to_dict() for c in self.members]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Pool":
        doc = json.loads(text)
        return cls(doc["capacity"], [Candidate.from_dict(c) for c in doc["members"]])


def greedy_insert(pool: Pool, cand: Candidate) -> Pool:
    pool.insert(cand)
    return pool


@dataclass
class RunConfig:
    task: str = "tsp"
    instance: str | None = None  # TSPLIB file or placement JSON; None = bundled eil51 / synthetic netlist
    iterations: int = 200
    pool_capacity: int = 5
    visual_mode: bool = True
    backend: str = "null"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    replay_dir: str | None = None
    command: list[str] | None = None  # runtime template; {code_file} and {python} are substituted
    language: str = "Python"
    template_dir: str | None = None
    seed_code: str | None = None
    tsp_timeout: float = sandbox.TSP_TIMEOUT
    step_timeout: float = sandbox.STEP_TIMEOUT
    eval_cap: int = sandbox.EVAL_CAP
    tsp_eval_budget: int = 20_000
    tsp_runs: int = 3
    step_iters: int = 300
    synthetic: dict[str, Any] = field(default_factory=dict)
    rng_seed: int = 0
    run_dir: str = "runs/latest"
    temperature: float = 0.8
    max_tokens: int = 4096
    max_attempts: int = MAX_ATTEMPTS

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.pool_capacity < 1:
            raise ValueError("pool_capacity must be >= 1")
        if not 1 <= self.max_attempts <= MAX_ATTEMPTS:
            raise ValueError(f"max_attempts must be in 1..{MAX_ATTEMPTS}")
        if self.tsp_runs < 1 or self.tsp_eval_budget < 1 or self.step_iters < 1 or self.eval_cap < 0:
            raise ValueError("tsp_runs, tsp_eval_budget and step_iters must be positive, eval_cap >= 0")
        if self.backend == "replay" and not self.replay_dir:
            raise ValueError("replay backend needs replay_dir")
        if self.backend == "live" and not (self.endpoint and self.model):
            raise ValueError("live backend needs endpoint and model")

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "RunConfig":
        """Read a JSON config; paths inside it are relative to the file. ``None`` overrides are ignored."""
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        for key in ("instance", "replay_dir", "template_dir", "seed_code", "run_dir"):
            if doc.get(key):
                doc[key] = str((path.parent / doc[key]).resolve())
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**doc)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# prompts ------------------------------------------------------------------

_PLACEHOLDER = re.compile(r"\{(\w+)\}")
_VISUAL_PREFIX = "[visual] "


def load_template(task: str, kind: str, template_dir: str | Path | None = None) -> str:
    name = f"{task}_{kind}.txt"
    try:
        if template_dir is None:
            return resources.files("cpevolve.templates").joinpath(name).read_text(encoding="utf-8")
        return (Path(template_dir) / name).read_text(encoding="utf-8")
    except (FileNotFoundError, IsADirectoryError):
        raise TemplateMissing(f"no template {name} in {template_dir or 'the bundled templates'}") from None


def fill_template(template: str, values: dict[str, str], visual_mode: bool) -> str:
    """Drop or unmark ``[visual]`` lines, then substitute ``{name}`` placeholders in one pass."""
    lines = []
    for line in template.splitlines():
        if line.startswith(_VISUAL_PREFIX):
            if visual_mode:
                lines.append(line[len(_VISUAL_PREFIX):])
        else:
            lines.append(line)
    text = "\n".join(lines)
    return _PLACEHOLDER.sub(lambda m: values.get(m.group(1), m.group(0)), text)


def _score_text(score: float) -> str:
    return f"{score:.2f}"


def _parent_images(parent: Candidate, task: str, artifact_root: Path | None) -> list[bytes]:
    images = []
    for kind in IMAGE_KINDS[task]:
        name = f"{parent.id}_{kind}.png"
        if name not in parent.artifacts or artifact_root is None:
            raise FileNotFoundError(f"candidate {parent.id} has no {kind} artifact")
        images.append((Path(artifact_root) / name).read_bytes())
    return images


def build_prompt(
    kind: str,
    parents: Sequence[Candidate],
    task: str,
    visual_mode: bool,
    *,
    artifact_root: str | Path | None = None,
    template_dir: str | Path | None = None,
    language: str = "Python",
    model: str = "",
    temperature: float = 0.8,
    max_tokens: int = 4096,
) -> ChatRequest:
    """One user message: the filled template, then each parent's images in parent order."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    expected = {"mutation": 1, "crossover": 2}.get(kind)
    if expected is None:
        raise ValueError(f"unknown operation {kind!r}")
    if len(parents) != expected:
        raise ParentCountMismatch(f"{kind} needs {expected} parent(s), got {len(parents)}")
    for p in parents:
        if not p.scored:
            raise UnscoredCandidate(f"parent {p.id} has no score")
    template = load_template(task, kind, template_dir)

    score_key = "distance" if task == "tsp" else "whpwl"
    values = {"language": language}
    if kind == "mutation":
        values.update(code=parents[0].code, **{score_key: _score_text(parents[0].score)})
    else:
        for i, p in enumerate(parents, 1):
            values.update({f"code_{i}": p.code, f"{score_key}_{i}": _score_text(p.score)})
    parts = [text_part(fill_template(template, values, visual_mode))]
    if visual_mode:
        root = Path(artifact_root) if artifact_root is not None else None
        parts += [image_part(png) for p in parents for png in _parent_images(p, task, root)]
    return ChatRequest(
        model=model,
        messages=[{"role": "user", "content": parts}],
        temperature=temperature,
        max_tokens=max_tokens,
        meta={"kind": kind, "parent_ids": [p.id for p in parents], "parent_codes": [p.code for p in parents]},
    )


_FENCE = re.compile(r"```[^\n]*\n(.*?)(?:```|\Z)", re.DOTALL)


def extract_code(response: str) -> str:
    """Longest fenced block if there is one, otherwise the trimmed response."""
    if not response or not response.strip():
        raise EmptyCode("empty response")
    blocks = [m.group(1) for m in _FENCE.finditer(response)]
    code = max(blocks, key=len).strip("\r\n") if blocks else response.strip()
    if not code.strip():
        raise EmptyCode("response contains no code")
    if len(code.encode("utf-8")) > MAX_CODE_BYTES:
        raise Oversized(f"code is {len(code.encode('utf-8'))} bytes, limit {MAX_CODE_BYTES}")
    return code


# tasks --------------------------------------------------------------------

class Evaluation(NamedTuple):
    score: float | None
    status: str
    detail: str
    payload: dict[str, Any]
    wall_time: float


class _TspTask:
    name = "tsp"

    def __init__(self, config: RunConfig):
        self.config = config
        if config.instance:
            self.inst: TspInstance = load_instance(config.instance, bundled_best_known())
        else:
            self.inst = bundled_instance("eil51")

    def seed_code(self) -> str:
        return resources.files("cpevolve.seeds").joinpath("tsp_fwa.py").read_text(encoding="utf-8")

    def evaluate(self, code: str) -> Evaluation:
        """Mean rounded length over ``tsp_runs`` seeds; any failed run fails the candidate."""
        cfg = self.config
        lengths, tours, wall = [], [], 0.0
        for r in range(cfg.tsp_runs):
            v = sandbox.run_tsp_candidate(
                code, self.inst, cfg.tsp_eval_budget, cfg.tsp_timeout, seed=cfg.rng_seed + r, command=cfg.command
            )
            wall += v.wall_time
            if not v.scored:
                return Evaluation(None, v.outcome.value, f"run {r}: {v.detail} {v.stderr_excerpt[-300:]}".strip(), {}, wall)
            lengths.append(v.score)
            tours.append(v.payload["tour"])
        best = min(range(len(lengths)), key=lambda i: lengths[i])
        return Evaluation(sum(lengths) / len(lengths), "scored", "", {"tour": tours[best]}, wall)

    def render(self, cand_id: str, payload: dict, run_dir: Path) -> list[str]:
        names = []
        for kind in TSP_KINDS:
            art = render_artifact(kind, inst=self.inst, tour=payload["tour"])
            names.append(art.save(run_dir, cand_id).name)
        return names


class _StepTask:
    name = "step"

    def __init__(self, config: RunConfig):
        self.config = config
        if config.instance:
            self.prob = PlacementProblem.load(config.instance)
        else:
            self.prob = synthetic_problem(**config.synthetic)

    def seed_code(self) -> str:
        return resources.files("cpevolve.seeds").joinpath("step_base.py").read_text(encoding="utf-8")

    def evaluate(self, code: str) -> Evaluation:
        cfg = self.config
        v = sandbox.run_step_candidate(
            code, self.prob, cfg.step_iters, cfg.step_timeout, cfg.eval_cap, rng_seed=cfg.rng_seed, command=cfg.command
        )
        if not v.scored:
            return Evaluation(None, v.outcome.value, f"{v.detail} {v.stderr_excerpt[-300:]}".strip(), {}, v.wall_time)
        detail = f"{len(v.fallbacks)} fallback iteration(s)" if v.fallbacks else ""
        return Evaluation(v.score, "scored", detail, {"coords": v.payload["coords"]}, v.wall_time)

    def render(self, cand_id: str, payload: dict, run_dir: Path) -> list[str]:
        art = render_artifact("placement", prob=self.prob, coords=payload["coords"])
        return [art.save(run_dir, cand_id).name]


def make_task(config: RunConfig):
    return _TspTask(config) if config.task == "tsp" else _StepTask(config)


def make_backend(config: RunConfig, cursor: int = 0) -> Backend:
    if config.backend == "live":
        return LiveBackend(config.endpoint, config.api_key_env)
    if config.backend == "replay":
        return ReplayBackend(config.replay_dir, cursor)
    return NullBackend()


# the loop -----------------------------------------------------------------

class EvolveResult(NamedTuple):
    best: Candidate
    history: list[dict[str, Any]]
    pool: Pool


def read_history(run_dir: str | Path) -> list[dict[str, Any]]:
    path = Path(run_dir) / "history.jsonl"
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def replay_pool(history: Sequence[dict[str, Any]], capacity: int) -> Pool:
    """Rebuild the pool from a history log by re-running the greedy insertions."""
    pool = Pool(capacity)
    for rec in history:
        if rec["type"] in ("seed", "operation") and rec.get("candidate"):
            pool.insert(Candidate.from_dict(rec["candidate"]))
    return pool


def _code_suffix(language: str) -> str:
    return {"python": ".py"}.get(language.lower(), ".txt")


def _rng_state(rng: random.Random) -> list:
    version, internal, gauss = rng.getstate()
    return [version, list(internal), gauss]


def _set_rng_state(rng: random.Random, state: list) -> None:
    rng.setstate((state[0], tuple(state[1]), state[2]))


class _Run:
    def __init__(self, config: RunConfig, backend: Backend | None, resume: bool):
        self.config = config
        self.run_dir = Path(config.run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.task = make_task(config)
        self.rng = random.Random(config.rng_seed)
        self.pool = Pool(config.pool_capacity)
        self.done = 0
        self.history_path = self.run_dir / "history.jsonl"
        self.state_path = self.run_dir / "state.json"
        cursor = 0
        if resume and self.state_path.exists():
            state = json.loads(self.state_path.read_text(encoding="utf-8"))
            self.done = state["iteration"]
            self.pool = Pool.from_json(json.dumps(state["pool"]))
            _set_rng_state(self.rng, state["rng"])
            cursor = state.get("backend_cursor") or 0
            # drop records of an iteration that was interrupted before its state was saved
            kept = [r for r in read_history(self.run_dir) if r.get("iteration", 0) <= self.done]
            self.history_path.write_text("".join(json.dumps(r) + "\n" for r in kept), encoding="utf-8")
        else:
            for name in ("history.jsonl", "state.json", "pool.json"):
                (self.run_dir / name).unlink(missing_ok=True)
        self.backend = backend if backend is not None else make_backend(config, cursor)

    def record(self, rec: dict[str, Any]) -> None:
        with self.history_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")

    def save_code(self, cand: Candidate) -> None:
        (self.run_dir / (cand.id + _code_suffix(self.config.language))).write_text(cand.code, encoding="utf-8")

    def persist(self) -> None:
        state = {
            "iteration": self.done,
            "config": self.config.to_dict(),
            "pool": json.loads(self.pool.to_json()),
            "rng": _rng_state(self.rng),
            "backend_cursor": getattr(self.backend, "cursor", None),
        }
        self.state_path.write_text(json.dumps(state), encoding="utf-8")
        (self.run_dir / "pool.json").write_text(self.pool.to_json(), encoding="utf-8")

    def seed(self) -> None:
        cfg = self.config
        code = Path(cfg.seed_code).read_text(encoding="utf-8") if cfg.seed_code else self.task.seed_code()
        ev = self.task.evaluate(code)
        if ev.score is None:
            raise RuntimeError(f"seed candidate failed to score: {ev.status} {ev.detail}")
        cand = Candidate("s0", code, ev.score, [], "seed", 0)
        self.save_code(cand)
        cand.artifacts = self.task.render(cand.id, ev.payload, self.run_dir)
        self.pool.insert(cand)
        self.record({"type": "seed", "iteration": 0, "candidate": cand.to_dict(), "wall_time": ev.wall_time})
        self.persist()

    def operate(self, op: str, parents: list[Candidate], gen: int):
        """Attempt loop for one operation; returns (candidate, payload, attempts used, backend failed)."""
        cfg = self.config
        request = build_prompt(
            op, parents, cfg.task, cfg.visual_mode,
            artifact_root=self.run_dir, template_dir=cfg.template_dir, language=cfg.language,
            model=cfg.model, temperature=cfg.temperature, max_tokens=cfg.max_tokens,
        )
        parent_ids = [p.id for p in parents]
        for attempt in range(1, cfg.max_attempts + 1):
            rec = {"type": "attempt", "iteration": gen, "op": op, "attempt": attempt, "parents": parent_ids}
            try:
                response = self.backend.complete(request)
            except (BackendUnreachable, ReplayExhausted) as exc:
                self.record({**rec, "status": "backend_error", "detail": f"{type(exc).__name__}: {exc}"})
                return None, None, attempt, True
            try:
                code = extract_code(response)
            except (EmptyCode, Oversized) as exc:
                status = "empty_code" if isinstance(exc, EmptyCode) else "oversized"
                self.record({**rec, "status": status, "detail": str(exc), "score": None})
                continue
            ev = self.task.evaluate(code)
            self.record({**rec, "status": ev.status, "detail": ev.detail, "score": ev.score,
                         "wall_time": round(ev.wall_time, 3), "code": code})
            if ev.score is not None:
                cand = Candidate(f"g{gen:03d}{op[0]}", code, ev.score, parent_ids, op, gen, [], attempt)
                return cand, ev.payload, attempt, False
        return None, None, cfg.max_attempts, False

    def iteration(self, gen: int) -> None:
        members = self.pool.members
        mut_parents = [self.rng.choice(members)]
        # a one-member pool can only cross a candidate with itself
        cross_parents = self.rng.sample(members, 2) if len(members) >= 2 else [members[0], members[0]]
        calls = 0
        for op, parents in (("mutation", mut_parents), ("crossover", cross_parents)):
            cand, payload, used, backend_failed = self.operate(op, parents, gen)
            calls += used
            inserted, evicted = False, None
            if cand is not None:
                self.save_code(cand)
                inserted, evicted = self.pool.insert(cand)
                if inserted:
                    cand.artifacts = self.task.render(cand.id, payload, self.run_dir)
            self.record({
                "type": "operation", "iteration": gen, "op": op, "parents": [p.id for p in parents],
                "attempts_used": used, "candidate": cand.to_dict() if cand else None,
                "inserted": inserted, "evicted": evicted.id if evicted else None,
            })
            if backend_failed:
                break
        self.record({"type": "iteration", "iteration": gen, "best_score": self.pool.best.score,
                     "pool": [c.id for c in self.pool.members], "llm_calls": calls})
        log.info("iteration %d: best %.4f, pool %s", gen, self.pool.best.score, self.pool.scores())


def evolve(config: RunConfig, backend: Backend | None = None, resume: bool = False) -> EvolveResult:
    """Run (or resume) the loop for ``config.iterations`` iterations."""
    config.validate()
    run = _Run(config, backend, resume)
    if not run.pool.members:
        run.seed()
    while run.done < config.iterations:
        run.iteration(run.done + 1)
        run.done += 1
        run.persist()
    return EvolveResult(run.pool.best, read_history(run.run_dir), run.pool)

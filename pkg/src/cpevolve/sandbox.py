"""Run candidate programs in a child process and score them.

Candidates never run inside this interpreter. They are launched from a
command template (default: this interpreter on ``{code_file}``; ``{python}``
also expands to it) in a scratch directory and
talk line-delimited JSON over stdin/stdout. Scores are always recomputed
here from what the candidate returns.

TSP protocol::

    -> {"task": "tsp", "coords": [[x, y], ...], "eval_budget": B, "seed": S}
    <- {"tour": [...]}

Step-size protocol, once per optimizer iteration::

    -> {"k": k, "v": [...], "g": [...], "base_step": b}
    <- {"eval": [...]}          (optional, at most eval_cap times)
    -> {"value": f}
    <- {"step": s}
"""
from __future__ import annotations

import enum
import json
import math
import os
import queue
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidPermutation
from .placement import AbortRun, PlacementProblem, run_placement, weighted_hpwl
from .tsp import TspInstance, check_tour, tour_length

DEFAULT_COMMAND = (sys.executable, "{code_file}")
TSP_TIMEOUT = 60.0
STEP_TIMEOUT = 2.0
EVAL_CAP = 8
STDERR_KEEP = 2000


class Outcome(str, enum.Enum):
    SCORED = "scored"
    TIMEOUT = "timeout"
    PROTOCOL_ERROR = "protocol_error"
    CRASH_EXIT = "crash_exit"
    INVALID_RESULT = "invalid_result"
    EVAL_CAP_EXCEEDED = "eval_cap_exceeded"


@dataclass
class SandboxVerdict:
    outcome: Outcome
    score: float | None = None
    wall_time: float = 0.0
    eval_calls: int = 0
    stderr_excerpt: str = ""
    detail: str = ""
    payload: dict[str, Any] = field(default_factory=dict)
    fallbacks: list[tuple[int, str]] = field(default_factory=list)

    @property
    def scored(self) -> bool:
        return self.outcome is Outcome.SCORED


class _Fail(Exception):
    def __init__(self, outcome: Outcome, detail: str):
        super().__init__(detail)
        self.outcome = outcome
        self.detail = detail


class _Child:
    """A candidate process with a line queue fed by a reader thread."""

    def __init__(self, code: str, command: Sequence[str] | None, workdir: Path):
        code_file = workdir / "candidate.py"
        code_file.write_text(code, encoding="utf-8")
        argv = [
            part.replace("{code_file}", str(code_file)).replace("{python}", sys.executable)
            for part in (command or DEFAULT_COMMAND)
        ]
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            cwd=workdir,
            text=True,
            encoding="utf-8",
            errors="replace",
            bufsize=1,
            start_new_session=True,
        )
        self.lines: queue.Queue[str | None] = queue.Queue()
        self._stderr: list[str] = []
        self._threads = [
            threading.Thread(target=self._pump_stdout, daemon=True),
            threading.Thread(target=self._pump_stderr, daemon=True),
        ]
        for t in self._threads:
            t.start()

    def _pump_stdout(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def _pump_stderr(self):
        size = 0
        for line in self.proc.stderr:
            self._stderr.append(line)
            size += len(line)
            while size > 4 * STDERR_KEEP and len(self._stderr) > 1:
                size -= len(self._stderr.pop(0))

    def stderr(self) -> str:
        return "".join(self._stderr)[-STDERR_KEEP:]

    def send(self, doc: dict) -> None:
        try:
            self.proc.stdin.write(json.dumps(doc) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            raise self._gone("candidate closed its input") from None

    def close_input(self) -> None:
        try:
            self.proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass

    def _gone(self, what: str) -> _Fail:
        try:
            code = self.proc.wait(timeout=1.0)
        except subprocess.TimeoutExpired:
            code = None
        if code:
            return _Fail(Outcome.CRASH_EXIT, f"{what}; exit status {code}")
        return _Fail(Outcome.PROTOCOL_ERROR, f"{what} before a complete response")

    def read(self, deadline: float) -> dict:
        """Next JSON object from the child, or raise on timeout / EOF / bad JSON."""
        try:
            line = self.lines.get(timeout=max(0.0, deadline - time.monotonic()))
        except queue.Empty:
            raise _Fail(Outcome.TIMEOUT, "no response before the deadline") from None
        if line is None:
            self.lines.put(None)
            raise self._gone("candidate closed its output")
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            raise _Fail(Outcome.PROTOCOL_ERROR, f"unparsable line: {line[:200]!r}") from None
        if not isinstance(doc, dict):
            raise _Fail(Outcome.PROTOCOL_ERROR, f"expected a JSON object, got {line[:200]!r}")
        return doc

    def finish(self, deadline: float) -> None:
        """Require a clean exit with no further output."""
        self.close_input()
        try:
            line = self.lines.get(timeout=max(0.0, deadline - time.monotonic()))
        except queue.Empty:
            return  # still running after its answer: just stop it
        if line is not None and line.strip():
            raise _Fail(Outcome.PROTOCOL_ERROR, f"trailing output after the final response: {line[:200]!r}")
        try:
            code = self.proc.wait(timeout=max(0.05, deadline - time.monotonic()))
        except subprocess.TimeoutExpired:
            return
        if code:
            raise _Fail(Outcome.CRASH_EXIT, f"exit status {code}")

    def kill(self) -> None:
        if self.proc.poll() is None:
            try:
                os.killpg(self.proc.pid, signal.SIGKILL)
            except (ProcessLookupError, PermissionError):
                self.proc.kill()
        try:
            self.proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            pass
        for stream in (self.proc.stdin, self.proc.stdout, self.proc.stderr):
            try:
                stream.close()
            except (OSError, ValueError):
                pass
        for t in self._threads:
            t.join(timeout=1.0)


def run_tsp_candidate(
    code: str,
    inst: TspInstance,
    eval_budget: int,
    timeout: float = TSP_TIMEOUT,
    seed: int = 0,
    command: Sequence[str] | None = None,
) -> SandboxVerdict:
    """Run one TSP candidate; the verdict's score is the rounded tour length."""
    if not code.strip():
        raise ValueError("empty candidate code")
    start = time.monotonic()
    deadline = start + timeout
    with tempfile.TemporaryDirectory(prefix="cpevolve-") as tmp:
        child = _Child(code, command, Path(tmp))
        try:
            child.send({"task": "tsp", "coords": [list(c) for c in inst.coords], "eval_budget": eval_budget, "seed": seed})
            child.close_input()
            reply = child.read(deadline)
            if "tour" not in reply:
                raise _Fail(Outcome.PROTOCOL_ERROR, "response has no 'tour' field")
            try:
                tour = check_tour(reply["tour"], inst.dimension).tolist()
            except InvalidPermutation as exc:
                raise _Fail(Outcome.INVALID_RESULT, str(exc)) from None
            child.finish(min(deadline, time.monotonic() + STEP_TIMEOUT))
            verdict = SandboxVerdict(Outcome.SCORED, float(tour_length(inst, tour, "rounded")), payload={"tour": tour})
        except _Fail as fail:
            verdict = SandboxVerdict(fail.outcome, detail=fail.detail)
        finally:
            child.kill()
        verdict.wall_time = time.monotonic() - start
        verdict.stderr_excerpt = child.stderr()
    return verdict


class _StepBridge:
    """Step hook that forwards each iteration to the child process."""

    def __init__(self, child: _Child, prob: PlacementProblem, timeout: float, eval_cap: int):
        self.child = child
        self.prob = prob
        self.timeout = timeout
        self.eval_cap = eval_cap
        self.k = 0
        self.eval_calls = 0
        self.failure: _Fail | None = None

    def _abort(self, fail: _Fail):
        self.failure = fail
        raise AbortRun(fail.detail)

    def __call__(self, v, g, fn, base_step):
        k, self.k = self.k, self.k + 1
        deadline = time.monotonic() + self.timeout
        try:
            self.child.send({"k": k, "v": v.tolist(), "g": g.tolist(), "base_step": base_step})
            used = 0
            while True:
                msg = self.child.read(deadline)
                if "eval" in msg:
                    if used >= self.eval_cap:
                        raise _Fail(Outcome.EVAL_CAP_EXCEEDED, f"more than {self.eval_cap} evaluations in iteration {k}")
                    try:
                        point = np.asarray(msg["eval"], dtype=float)
                    except (TypeError, ValueError):
                        raise _Fail(Outcome.PROTOCOL_ERROR, "eval point is not a list of numbers") from None
                    if point.shape != v.shape:
                        raise _Fail(Outcome.PROTOCOL_ERROR, f"eval point has shape {point.shape}, expected {v.shape}")
                    used += 1
                    value = fn(point)
                    self.eval_calls += 1
                    self.child.send({"value": value})
                elif "step" in msg:
                    return _step_value(msg["step"])
                else:
                    raise _Fail(Outcome.PROTOCOL_ERROR, f"unexpected message keys {sorted(msg)}")
        except _Fail as fail:
            self._abort(fail)


def _step_value(raw) -> float:
    # a bad step is not fatal: the optimizer falls back to base_step for this iteration
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValueError(f"step is not a number: {raw!r}")
    step = float(raw)
    if not math.isfinite(step) or step <= 0:
        raise ValueError(f"step must be finite and positive, got {step!r}")
    return step


def run_step_candidate(
    code: str,
    prob: PlacementProblem,
    iters: int,
    timeout_per_iter: float = STEP_TIMEOUT,
    eval_cap: int = EVAL_CAP,
    rng_seed: int = 0,
    command: Sequence[str] | None = None,
) -> SandboxVerdict:
    """Drive :func:`run_placement` with the candidate as step hook; score = final wHPWL."""
    if not code.strip():
        raise ValueError("empty candidate code")
    start = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="cpevolve-") as tmp:
        child = _Child(code, command, Path(tmp))
        bridge = _StepBridge(child, prob, timeout_per_iter, eval_cap)
        try:
            try:
                result = run_placement(prob, iters, bridge, rng_seed=rng_seed, eval_cap=eval_cap)
            except AbortRun:
                raise bridge.failure from None
            child.finish(time.monotonic() + timeout_per_iter)
            verdict = SandboxVerdict(
                Outcome.SCORED,
                weighted_hpwl(prob, result.coords),
                payload={"coords": result.coords.tolist()},
                fallbacks=result.events,
            )
        except _Fail as fail:
            verdict = SandboxVerdict(fail.outcome, detail=fail.detail)
        finally:
            child.kill()
        verdict.eval_calls = bridge.eval_calls
        verdict.wall_time = time.monotonic() - start
        verdict.stderr_excerpt = child.stderr()
    return verdict

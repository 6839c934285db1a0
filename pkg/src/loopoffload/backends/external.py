"""Adapter that compiles and times patterns with user-supplied commands.

Command templates are split with shell rules first and placeholders are then
substituted per argument, so paths with spaces survive intact. Commands run
inside the pattern's work directory. The run must print exactly one line of the
form ``OFFLOAD_TIME_MS=<float>``; every other stdout line is program output and
is compared against the expected output when one is known.
"""

from __future__ import annotations

import json
import os
import re
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..codegen import write_artifact
from ..errors import CompileError, InvalidConfig, MeasurementTimeout, RunError, TimeTokenError
from .base import BASELINE_ID, MeasurementResult

TIME_TOKEN = re.compile(r"^OFFLOAD_TIME_MS=([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)$")
PLACEHOLDERS = ("{kernel}", "{host}", "{workdir}")


@dataclass(frozen=True)
class ExternalBackendConfig:
    compile_cmd: str
    run_cmd: str
    timeout_s: float = 3600.0
    expected_output: Optional[str] = None  # path to the reference output
    baseline_cmd: Optional[str] = None  # all-CPU run; may use {workdir}
    repeats: int = 1

    def __post_init__(self):
        for ph in ("{kernel}", "{host}"):
            if ph not in self.compile_cmd:
                raise InvalidConfig(f"compile_cmd must contain {ph}")
        if "{workdir}" not in self.run_cmd:
            raise InvalidConfig("run_cmd must contain {workdir}")
        if not self.timeout_s > 0:
            raise InvalidConfig(f"timeout_s must be > 0, got {self.timeout_s}")
        if self.repeats < 1:
            raise InvalidConfig(f"repeats must be >= 1, got {self.repeats}")


def load_backend_config(path, repeats: Optional[int] = None) -> ExternalBackendConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read backend config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidConfig("backend config must be a JSON object")
    known = {"compile_cmd", "run_cmd", "timeout_s", "expected_output", "baseline_cmd", "repeats"}
    extra = set(data) - known
    if extra:
        raise InvalidConfig(f"unknown backend config keys: {sorted(extra)}")
    if "compile_cmd" not in data or "run_cmd" not in data:
        raise InvalidConfig("backend config needs compile_cmd and run_cmd")
    if repeats is not None:
        data["repeats"] = repeats
    return ExternalBackendConfig(**data)


def render_command(template: str, values: dict) -> list:
    out = []
    for arg in shlex.split(template):
        for key, v in values.items():
            arg = arg.replace("{" + key + "}", str(v))
        out.append(arg)
    return out


def parse_time_token(stdout: str) -> tuple:
    """(milliseconds, program output without the token line)."""
    times, rest = [], []
    for line in stdout.splitlines():
        m = TIME_TOKEN.match(line.strip())
        if m:
            times.append(float(m.group(1)))
        else:
            rest.append(line)
    if not times:
        raise TimeTokenError("run printed no OFFLOAD_TIME_MS=<float> line")
    if len(times) > 1:
        raise TimeTokenError("run printed more than one OFFLOAD_TIME_MS line")
    if not times[0] > 0:
        raise TimeTokenError(f"reported time must be > 0 ms, got {times[0]}")
    return times[0], "\n".join(rest)


def _run(argv, cwd, timeout, what):
    try:
        return subprocess.run(argv, cwd=cwd, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise MeasurementTimeout(f"{what} exceeded {timeout} s") from exc
    except OSError as exc:
        raise RunError(f"{what} could not start: {exc}") from exc


def _normalise(text: str) -> str:
    return "\n".join(line.rstrip() for line in text.strip().splitlines())


def _timed_runs(argv, cwd, config, what):
    best, outputs = None, []
    for _ in range(config.repeats):
        proc = _run(argv, cwd, config.timeout_s, what)
        if proc.returncode != 0:
            raise RunError(f"{what} exited with status {proc.returncode}: {proc.stderr.strip()[:200]}")
        ms, output = parse_time_token(proc.stdout)
        best = ms if best is None else min(best, ms)
        outputs.append(output)
    return best, outputs


def run_external(artifact, config: ExternalBackendConfig, workdir, pattern_id: int = -1,
                 reference_output: Optional[str] = None) -> MeasurementResult:
    """Write, compile and time one artifact; validity compares program output."""
    paths = write_artifact(artifact, workdir)
    values = {"kernel": paths["kernel"], "host": paths["host"], "workdir": paths["workdir"]}
    proc = _run(render_command(config.compile_cmd, values), paths["workdir"], config.timeout_s, "compile")
    if proc.returncode != 0:
        raise CompileError(f"compile exited with status {proc.returncode}: {proc.stderr.strip()[:200]}")
    ms, outputs = _timed_runs(render_command(config.run_cmd, values), paths["workdir"], config, "run")
    expected = reference_output
    if config.expected_output is not None:
        expected = Path(config.expected_output).read_text()
    valid = True
    if expected is not None:
        valid = all(_normalise(o) == _normalise(expected) for o in outputs)
    return MeasurementResult(pattern_id, ms, valid, "external")


class ExternalBackend:
    name = "external"
    parallel_safe = True  # each pattern gets its own work directory

    def __init__(self, config: ExternalBackendConfig, workdir):
        self.config = config
        self.workdir = Path(workdir)
        self._baseline_output: Optional[str] = None
        self._locks: dict = {}
        self._guard = threading.Lock()

    def _lock(self, key):
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def baseline(self) -> MeasurementResult:
        if self.config.baseline_cmd is None:
            raise InvalidConfig("the external backend needs baseline_cmd to time the all-CPU program")
        wd = self.workdir / "baseline"
        wd.mkdir(parents=True, exist_ok=True)
        argv = render_command(self.config.baseline_cmd, {"workdir": wd, "kernel": "", "host": ""})
        ms, outputs = _timed_runs(argv, wd, self.config, "baseline run")
        self._baseline_output = outputs[0]
        valid = True
        if self.config.expected_output is not None:
            expected = Path(self.config.expected_output).read_text()
            valid = all(_normalise(o) == _normalise(expected) for o in outputs)
        return MeasurementResult(BASELINE_ID, ms, valid, "external")

    def measure(self, pattern) -> MeasurementResult:
        key = os.fspath(self.workdir / pattern.artifact.name)
        with self._lock(key):
            return run_external(pattern.artifact, self.config, self.workdir, pattern.id, self._baseline_output)

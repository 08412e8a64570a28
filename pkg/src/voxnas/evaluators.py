"""Evaluation backends the search can plug in.

Three families: analytic landscapes for validating the optimizer without
building networks, a deterministic architecture surrogate that scores a
built network from its statistics, and a subprocess client that ships the
network IR to an external trainer over a JSON request/reply protocol.

Every evaluator declares two capabilities the objective pipeline reads:
``needs_architecture`` (whether legality, building, and the memory gate
apply) and ``cacheable`` (whether its value depends only on the floor of
the point, making the floor-keyed cache sound).
"""

from __future__ import annotations

import json
import math
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from .blocks import matrix_from_ops
from .network import NetworkIR, count_parameters, ir_to_dict
from .objective import EvaluationOutcome
from .spaces import DecodedConfig, SearchSpace

SPHERE = "sphere"
RASTRIGIN = "rastrigin"
STEP_SPHERE = "step-sphere"
ARCH_SURROGATE = "arch-surrogate"
EXTERNAL = "external"

ANALYTIC_KINDS = (SPHERE, RASTRIGIN, STEP_SPHERE)
RASTRIGIN_HALF_WIDTH = 5.12


class AnalyticLandscape:
    """Test function over the search box, reported as dice = exp(-g).

    Points are rescaled to the landscape's canonical box before applying
    the test function g >= 0, so the minimum (dice = 1) sits at the box
    center. The step-quantized sphere evaluates the floor vector instead of
    the raw point, reproducing the piecewise-constant landscape the decoder
    induces: its value depends only on floor(x), so it is cacheable, while
    the smooth variants are not.
    """

    needs_architecture = False

    def __init__(self, space: SearchSpace, kind: str):
        if kind not in ANALYTIC_KINDS:
            raise ValueError(f"unknown analytic landscape {kind!r}")
        self.eval_id = kind
        self.kind = kind
        self.cacheable = kind == STEP_SPHERE
        self._center = (space.lower + space.upper) / 2.0
        self._half = (space.upper - space.lower) / 2.0
        self._center_floor = np.floor(self._center)

    def g_value(self, point) -> float:
        x = np.asarray(point, dtype=float)
        if self.kind == STEP_SPHERE:
            z = (np.floor(x) - self._center_floor) / self._half
            return float(np.sum(z * z))
        z = (x - self._center) / self._half
        if self.kind == SPHERE:
            return float(np.sum(z * z))
        z = z * RASTRIGIN_HALF_WIDTH
        return float(10.0 * z.size + np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z)))

    def evaluate(self, point, decoded, ir) -> EvaluationOutcome:
        return EvaluationOutcome.trained(math.exp(-self.g_value(point)))


@dataclass(frozen=True)
class SurrogateParams:
    peak_dice: float = 0.9
    target_parameters: float = 5e6
    log_width: float = 0.5
    edge_penalty: float = 0.1

    def as_dict(self) -> dict:
        return {
            "peak_dice": self.peak_dice,
            "target_parameters": self.target_parameters,
            "log_width": self.log_width,
            "edge_penalty": self.edge_penalty,
        }


class ArchitectureSurrogate:
    """Deterministic stand-in for a training run, scored from the built IR.

    Dice peaks where the parameter count hits the target (Gaussian in
    log10-parameters) and improves slightly with denser blocks, creating a
    multimodal landscape over the discrete configuration space.
    """

    eval_id = ARCH_SURROGATE
    needs_architecture = True
    cacheable = True

    def __init__(self, params: SurrogateParams = SurrogateParams()):
        self.params = params

    def evaluate(self, point, decoded: DecodedConfig, ir: NetworkIR) -> EvaluationOutcome:
        p = self.params
        count = count_parameters(ir)
        edges = len(matrix_from_ops(decoded.ops, decoded.nodes).active_edges())
        spread = (math.log10(count) - math.log10(p.target_parameters)) / p.log_width
        dice = p.peak_dice * math.exp(-spread * spread) * (1.0 - p.edge_penalty / edges)
        return EvaluationOutcome.trained(dice)


@dataclass(frozen=True)
class TrainerProtocolConfig:
    """How to reach the external trainer executable."""

    command: tuple[str, ...]
    timeout_seconds: float = 600.0
    working_dir: str | None = None

    def __post_init__(self):
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")


@dataclass(frozen=True)
class TrainSettings:
    """Training request parameters forwarded verbatim to the trainer."""

    epochs: int = 5
    batch: int = 3
    seed: int = 0
    shape: tuple[int, int, int] = (16, 16, 16)
    classes: int = 3
    volumes: int = 8
    augment: bool = False

    def as_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch": self.batch,
            "seed": self.seed,
            "data": {
                "shape": list(self.shape),
                "classes": self.classes,
                "volumes": self.volumes,
                "augment": self.augment,
            },
        }


def build_request(ir: NetworkIR, train: TrainSettings) -> str:
    """Compact single-line request document for the trainer's standard input."""
    doc = {"ir": ir_to_dict(ir), "train": train.as_dict()}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _parse_reply(stdout: str) -> dict | None:
    text = stdout.strip()
    if not text:
        return None
    try:
        doc = json.loads(text)
        return doc if isinstance(doc, dict) else None
    except json.JSONDecodeError:
        pass
    for line in reversed(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            return doc
    return None


def external_trainer_evaluate(
    ir: NetworkIR,
    proto: TrainerProtocolConfig,
    train: TrainSettings,
) -> EvaluationOutcome:
    """Run one trainer process for one evaluation and map its reply.

    The reply document is authoritative; the exit code is advisory. A
    timeout kills the child. Any malformed or missing reply becomes a
    failure outcome rather than an exception.
    """
    request = build_request(ir, train)
    start = time.monotonic()
    try:
        result = subprocess.run(
            list(proto.command),
            input=request,
            capture_output=True,
            text=True,
            timeout=proto.timeout_seconds,
            cwd=proto.working_dir,
        )
    except subprocess.TimeoutExpired:
        return EvaluationOutcome.failure(
            "timeout", wall_seconds=time.monotonic() - start
        )
    except OSError as exc:
        return EvaluationOutcome.failure(
            f"could not start trainer: {exc}", wall_seconds=time.monotonic() - start
        )
    wall = time.monotonic() - start
    reply = _parse_reply(result.stdout)
    if reply is None:
        return EvaluationOutcome.failure(
            f"no parseable reply (exit {result.returncode})", wall_seconds=wall
        )
    status = reply.get("status")
    if status == "ok":
        dice = reply.get("dice")
        if not isinstance(dice, (int, float)):
            return EvaluationOutcome.failure("ok reply without numeric dice", wall_seconds=wall)
        return EvaluationOutcome.trained(float(dice), wall_seconds=wall)
    if status == "oom":
        return EvaluationOutcome.out_of_memory(str(reply.get("detail", "")), wall_seconds=wall)
    if status == "error":
        return EvaluationOutcome.failure(str(reply.get("detail", "trainer error")), wall_seconds=wall)
    return EvaluationOutcome.failure(f"unknown reply status {status!r}", wall_seconds=wall)


class ExternalTrainerEvaluator:
    """Evaluator adapter around the one-process-per-evaluation trainer client."""

    eval_id = EXTERNAL
    needs_architecture = True
    cacheable = True

    def __init__(self, proto: TrainerProtocolConfig, train: TrainSettings):
        self.proto = proto
        self.train = train

    def evaluate(self, point, decoded, ir) -> EvaluationOutcome:
        return external_trainer_evaluate(ir, self.proto, self.train)


def make_evaluator(
    name: str,
    space: SearchSpace,
    proto: TrainerProtocolConfig | None = None,
    train: TrainSettings | None = None,
):
    if name in ANALYTIC_KINDS:
        return AnalyticLandscape(space, name)
    if name == ARCH_SURROGATE:
        return ArchitectureSurrogate()
    if name == EXTERNAL:
        if proto is None:
            raise ValueError("external evaluator needs a trainer command")
        return ExternalTrainerEvaluator(proto, train or TrainSettings())
    raise ValueError(f"unknown evaluator {name!r}")

"""Objective value, penalty rule, and the floor-keyed evaluation cache.

The search minimizes f = -ln(dice) with dice clipped below at 1e-4, so
trainable outcomes live in [0, 9.2104). Configurations that cannot be
trained at all (illegal block, out-of-memory, or a misbehaving trainer)
receive the ceiling of that range, exactly 10, marking them worse than the
worst possible segmentation. Because every point with the same floor vector
decodes to the same network, results are memoized under the canonical key
of the decoded configuration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .network import ArchConfig, build_network, estimate_peak_memory
from .spaces import SearchSpace, canonical_key

PENALTY_OBJECTIVE = 10.0
DICE_FLOOR = 1e-4

TRAINED = "trained"
ILLEGAL = "illegal"
OOM = "oom"
FAILURE = "failure"

TRAJECTORY_COLUMNS = (
    "iteration", "phase", "key", "outcome", "f", "dice", "cache_hit", "wall_seconds",
)


class ObjectiveError(ValueError):
    """A dice value or evaluation request violates its contract."""


@dataclass(frozen=True)
class EvaluationOutcome:
    """Result of one attempted network evaluation."""

    kind: str
    dice: float | None = None
    detail: str = ""
    wall_seconds: float = 0.0

    def __post_init__(self):
        if (self.kind == TRAINED) != (self.dice is not None):
            raise ObjectiveError("dice must be present exactly for trained outcomes")

    @classmethod
    def trained(cls, dice: float, wall_seconds: float = 0.0) -> "EvaluationOutcome":
        return cls(TRAINED, dice=dice, wall_seconds=wall_seconds)

    @classmethod
    def illegal(cls, detail: str = "", wall_seconds: float = 0.0) -> "EvaluationOutcome":
        return cls(ILLEGAL, detail=detail, wall_seconds=wall_seconds)

    @classmethod
    def out_of_memory(cls, detail: str = "", wall_seconds: float = 0.0) -> "EvaluationOutcome":
        return cls(OOM, detail=detail, wall_seconds=wall_seconds)

    @classmethod
    def failure(cls, detail: str = "", wall_seconds: float = 0.0) -> "EvaluationOutcome":
        return cls(FAILURE, detail=detail, wall_seconds=wall_seconds)


def dice_to_objective(dice: float) -> float:
    """f = -ln(dice), with dice clipped below at 1e-4."""
    if not 0.0 <= dice <= 1.0:
        raise ObjectiveError(f"dice must lie in [0, 1], got {dice}")
    return -math.log(max(dice, DICE_FLOOR))


def penalty_value() -> float:
    """Objective assigned to untrainable configurations: ceil(max f) = 10."""
    return PENALTY_OBJECTIVE


@dataclass(frozen=True)
class CacheEntry:
    f: float
    kind: str
    dice: float | None
    detail: str = ""


class EvalCache:
    """Insert-once memo from canonical floor key to objective value."""

    def __init__(self):
        self._entries: dict[str, CacheEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> CacheEntry | None:
        return self._entries.get(key)

    def insert(self, key: str, entry: CacheEntry):
        if key in self._entries:
            raise ObjectiveError(f"cache key inserted twice: {key}")
        self._entries[key] = entry

    def items(self):
        return self._entries.items()


@dataclass(frozen=True)
class BuildSettings:
    """How decoded configurations are realized and costed during search."""

    input_shape: tuple[int, int, int] = (128, 128, 128)
    in_channels: int = 1
    num_classes: int = 20
    element_bytes: int = 4
    batch_per_device: int = 1
    budget_bytes: int = 16 * 2 ** 30


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated proposal, as logged in the search trajectory."""

    iteration: int
    phase: str
    point: tuple[float, ...]
    key: str
    outcome: EvaluationOutcome
    f: float
    cache_hit: bool


def _outcome_to_f(outcome: EvaluationOutcome) -> float:
    if outcome.kind == TRAINED:
        return dice_to_objective(outcome.dice)
    return penalty_value()


def evaluate_point(
    point,
    space: SearchSpace,
    evaluator,
    cache: EvalCache,
    settings: BuildSettings = BuildSettings(),
    iteration: int = 0,
    phase: str = "search",
) -> EvalRecord:
    """Decode, consult the cache, gate on legality and memory, then evaluate.

    Cache hits never reach the evaluator. For architecture-backed evaluators
    an illegal block or an over-budget memory estimate short-circuits to the
    penalty without an evaluator call; evaluator exceptions and out-of-range
    dice values are absorbed as failures so the search never aborts.
    """
    point = tuple(float(v) for v in point)
    decoded = space.decode(point)
    key = canonical_key(decoded)

    cacheable = getattr(evaluator, "cacheable", True)
    if cacheable:
        entry = cache.get(key)
        if entry is not None:
            outcome = EvaluationOutcome(
                kind=entry.kind,
                dice=entry.dice,
                detail=entry.detail,
            )
            return EvalRecord(iteration, phase, point, key, outcome, entry.f, True)

    outcome = _run_pipeline(point, decoded, space, evaluator, settings)
    if outcome.kind == TRAINED and not 0.0 <= outcome.dice <= 1.0:
        outcome = EvaluationOutcome.failure(
            f"evaluator returned dice outside [0, 1]: {outcome.dice}"
        )
    f = _outcome_to_f(outcome)
    if cacheable:
        cache.insert(key, CacheEntry(f, outcome.kind, outcome.dice, outcome.detail))
    return EvalRecord(iteration, phase, point, key, outcome, f, False)


def _run_pipeline(point, decoded, space, evaluator, settings) -> EvaluationOutcome:
    ir = None
    if getattr(evaluator, "needs_architecture", True):
        try:
            ir = build_network(ArchConfig(
                decoded=decoded,
                input_shape=settings.input_shape,
                in_channels=settings.in_channels,
                num_classes=settings.num_classes,
            ))
        except ValueError as exc:
            return EvaluationOutcome.illegal(str(exc))
        estimate = estimate_peak_memory(
            ir,
            element_bytes=settings.element_bytes,
            batch_per_device=settings.batch_per_device,
            budget_bytes=settings.budget_bytes,
        )
        if estimate.oom:
            return EvaluationOutcome.out_of_memory(
                f"peak {estimate.peak_activation_bytes} bytes/sample over budget"
            )
    try:
        return evaluator.evaluate(point, decoded, ir)
    except Exception as exc:
        return EvaluationOutcome.failure(f"evaluator raised: {exc}")


def fresh_trained_count(records) -> int:
    """Records that actually trained a network: trained outcome, no cache hit."""
    return sum(1 for r in records if r.outcome.kind == TRAINED and not r.cache_hit)


def record_to_row(record: EvalRecord) -> list[str]:
    dice = record.outcome.dice
    return [
        str(record.iteration),
        record.phase,
        record.key,
        record.outcome.kind,
        repr(record.f),
        "" if dice is None else repr(float(dice)),
        "true" if record.cache_hit else "false",
        repr(float(record.outcome.wall_seconds)),
    ]


def write_trajectory_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for record in records:
            writer.writerow(record_to_row(record))


def read_trajectory_rows(path) -> list[dict]:
    """Parse a trajectory CSV back into typed row dictionaries."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for raw in csv.DictReader(handle):
            rows.append({
                "iteration": int(raw["iteration"]),
                "phase": raw["phase"],
                "key": raw["key"],
                "outcome": raw["outcome"],
                "f": float(raw["f"]),
                "dice": float(raw["dice"]) if raw["dice"] else None,
                "cache_hit": raw["cache_hit"] == "true",
                "wall_seconds": float(raw["wall_seconds"]),
            })
    return rows

import math

import numpy as np
import pytest

from voxnas.objective import (
    FAILURE,
    ILLEGAL,
    OOM,
    TRAINED,
    BuildSettings,
    CacheEntry,
    EvalCache,
    EvaluationOutcome,
    ObjectiveError,
    dice_to_objective,
    evaluate_point,
    fresh_trained_count,
    penalty_value,
    read_trajectory_rows,
    write_trajectory_csv,
)

TINY = BuildSettings(input_shape=(16, 16, 16), num_classes=3)


class StubEvaluator:
    """Architecture-backed evaluator with a programmable dice response."""

    eval_id = "stub"
    needs_architecture = True
    cacheable = True

    def __init__(self, dice=0.5):
        self.dice = dice
        self.calls = 0

    def evaluate(self, point, decoded, ir):
        self.calls += 1
        if callable(self.dice):
            return self.dice(point, decoded, ir)
        return EvaluationOutcome.trained(self.dice)


def test_dice_to_objective_reference_values():
    assert dice_to_objective(1.0) == 0.0
    assert dice_to_objective(1e-4) == pytest.approx(9.21034, abs=1e-5)
    assert dice_to_objective(1e-9) == pytest.approx(9.21034, abs=1e-5)
    assert dice_to_objective(0.82) == pytest.approx(0.19845, abs=1e-5)
    assert dice_to_objective(0.5) == pytest.approx(math.log(2.0), abs=1e-12)


def test_dice_to_objective_rejects_out_of_range():
    for bad in (-0.1, 1.1, 2.0):
        with pytest.raises(ObjectiveError):
            dice_to_objective(bad)


def test_penalty_value():
    assert penalty_value() == 10.0
    assert math.ceil(-math.log(1e-4)) == 10
    for dice in np.linspace(0.0, 1.0, 101):
        assert penalty_value() > dice_to_objective(float(dice))


def test_objective_strictly_decreasing_above_floor():
    dices = np.linspace(1e-4, 1.0, 500)
    values = [dice_to_objective(float(d)) for d in dices]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_outcome_invariant():
    with pytest.raises(ObjectiveError):
        EvaluationOutcome(TRAINED)
    with pytest.raises(ObjectiveError):
        EvaluationOutcome(ILLEGAL, dice=0.5)


def test_cache_insert_once():
    cache = EvalCache()
    cache.insert("k", CacheEntry(1.0, TRAINED, 0.4))
    with pytest.raises(ObjectiveError):
        cache.insert("k", CacheEntry(2.0, TRAINED, 0.1))
    assert cache.get("k").f == 1.0


def test_equal_floors_hit_the_cache(segnas4):
    evaluator = StubEvaluator(dice=0.5)
    cache = EvalCache()
    first = evaluate_point((21.1, 3.5, 1.2, 0.7), segnas4, evaluator, cache, TINY)
    second = evaluate_point((21.9, 3.0, 1.9, 0.1), segnas4, evaluator, cache, TINY)
    assert evaluator.calls == 1
    assert not first.cache_hit and second.cache_hit
    assert first.key == second.key
    assert second.f == first.f == pytest.approx(math.log(2.0))
    assert second.outcome.kind == TRAINED and second.outcome.dice == 0.5


def test_illegal_structure_short_circuits(segnas11):
    evaluator = StubEvaluator()
    cache = EvalCache()
    # ops floor (0, 2, 2, ...): node 2 has no parent.
    point = (8.0, 2.0, 0.0, 0.0, 3.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0)
    record = evaluate_point(point, segnas11, evaluator, cache, TINY)
    assert record.outcome.kind == ILLEGAL
    assert record.f == 10.0
    assert evaluator.calls == 0


def test_oom_maps_to_penalty(segnas4):
    evaluator = StubEvaluator()
    cache = EvalCache()
    tight = BuildSettings(input_shape=(16, 16, 16), num_classes=3, budget_bytes=0)
    record = evaluate_point((21.0, 3.0, 1.0, 0.0), segnas4, evaluator, cache, tight)
    assert record.outcome.kind == OOM
    assert record.f == 10.0
    assert evaluator.calls == 0


def test_evaluator_exception_becomes_failure(segnas4):
    class Exploding(StubEvaluator):
        def evaluate(self, point, decoded, ir):
            raise RuntimeError("boom")

    record = evaluate_point((21.0, 3.0, 1.0, 0.0), segnas4, Exploding(), EvalCache(), TINY)
    assert record.outcome.kind == FAILURE
    assert record.f == 10.0


def test_out_of_range_dice_becomes_failure(segnas4):
    record = evaluate_point(
        (21.0, 3.0, 1.0, 0.0), segnas4, StubEvaluator(dice=1.5), EvalCache(), TINY)
    assert record.outcome.kind == FAILURE
    assert record.f == 10.0


def test_exactly_one_pipeline_per_distinct_floor(segnas4):
    rng = np.random.default_rng(0)
    points = segnas4.sample(rng, 60)
    evaluator = StubEvaluator(dice=0.7)
    cache = EvalCache()
    records = [evaluate_point(p, segnas4, evaluator, cache, TINY) for p in points]
    distinct = {r.key for r in records}
    # Keys whose floor decodes to an unbuildable shape never reach the
    # evaluator; every key that does reach it is evaluated exactly once.
    trained = {r.key for r in records if r.outcome.kind == TRAINED}
    assert evaluator.calls == len(trained)
    assert fresh_trained_count(records) == len(trained)
    assert sum(r.cache_hit for r in records) == len(records) - len(distinct)


def test_penalty_only_for_failure_kinds(segnas4):
    # A trained dice at the clip floor stays strictly below the penalty.
    record = evaluate_point(
        (8.0, 2.0, 0.0, 0.0), segnas4, StubEvaluator(dice=1e-4), EvalCache(), TINY)
    assert record.outcome.kind == TRAINED
    assert record.f == pytest.approx(9.21034, abs=1e-5)
    assert record.f < penalty_value()


def test_replay_reproduces_identical_values(segnas4):
    rng = np.random.default_rng(1)
    points = segnas4.sample(rng, 40)
    evaluator = StubEvaluator(
        dice=lambda point, decoded, ir: EvaluationOutcome.trained(
            0.1 + 0.8 * (decoded.n - 8) / 25.0)
    )
    cache = EvalCache()
    records = [evaluate_point(p, segnas4, evaluator, cache, TINY) for p in points]
    calls_before = evaluator.calls
    for record in records:
        replayed = evaluate_point(record.point, segnas4, evaluator, cache, TINY)
        assert replayed.cache_hit
        assert replayed.f == record.f
    assert evaluator.calls == calls_before


def test_trajectory_csv_round_trip(tmp_path, segnas4):
    evaluator = StubEvaluator(dice=0.25)
    cache = EvalCache()
    records = [
        evaluate_point((21.2, 3.1, 1.1, 0.2), segnas4, evaluator, cache, TINY,
                       iteration=0, phase="init"),
        evaluate_point((21.7, 3.9, 1.8, 0.9), segnas4, evaluator, cache, TINY,
                       iteration=1, phase="search"),
    ]
    path = tmp_path / "trajectory.csv"
    write_trajectory_csv(records, path)
    rows = read_trajectory_rows(path)
    assert [r["phase"] for r in rows] == ["init", "search"]
    assert rows[0]["f"] == records[0].f
    assert rows[1]["cache_hit"] is True
    assert rows[0]["dice"] == 0.25
    assert rows[0]["key"] == records[0].key

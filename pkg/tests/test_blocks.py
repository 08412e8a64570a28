import itertools

import numpy as np
import pytest

from voxnas.blocks import (
    BlockError,
    OperationMatrix,
    Violation,
    matrix_from_ops,
    operation_param_count,
    render_matrix,
    triangle_size,
    validate_structure,
)


def shifted_diagonal(nodes, code=2):
    return OperationMatrix(nodes, {(i, i + 1): code for i in range(1, nodes)})


def reachability_oracle(matrix):
    """Brute-force legality: node 1 reaches everything, everything reaches N."""
    n = matrix.nodes
    edges = {(i, j) for (i, j), code in matrix.entries.items() if code != 0}

    def reach(start, forward):
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for i, j in edges:
                src, dst = (i, j) if forward else (j, i)
                if src == node and dst not in seen:
                    seen.add(dst)
                    frontier.append(dst)
        return seen

    return reach(1, forward=True) == set(range(1, n + 1)) and \
        reach(n, forward=False) == set(range(1, n + 1))


def test_matrix_from_ops_chain():
    matrix = matrix_from_ops([2, 0, 2], nodes=3)
    assert matrix.get(1, 2) == 2
    assert matrix.get(2, 3) == 2
    assert matrix.get(1, 3) == 0
    assert validate_structure(matrix).legal


def test_matrix_from_ops_uses_prefix_only():
    matrix = matrix_from_ops([2, 2, 3, 6, 3, 3], nodes=3)
    assert matrix.get(1, 2) == 2
    assert matrix.get(1, 3) == 2
    assert matrix.get(2, 3) == 3
    assert matrix == matrix_from_ops([2, 2, 3], nodes=3)


def test_matrix_from_ops_two_nodes():
    matrix = matrix_from_ops([5], nodes=2)
    assert matrix.get(1, 2) == 5
    assert len(matrix.active_edges()) == 1


def test_matrix_from_ops_errors():
    with pytest.raises(BlockError):
        matrix_from_ops([2, 0], nodes=3)
    with pytest.raises(BlockError):
        matrix_from_ops([7], nodes=2)
    with pytest.raises(BlockError):
        matrix_from_ops([], nodes=1)


def test_prefix_property_over_random_vectors():
    rng = np.random.default_rng(5)
    for _ in range(200):
        ops = rng.integers(0, 7, size=6).tolist()
        for nodes in (2, 3):
            prefix = ops[: triangle_size(nodes)]
            assert matrix_from_ops(ops, nodes) == matrix_from_ops(prefix, nodes)


def test_shifted_diagonal_legal():
    verdict = validate_structure(shifted_diagonal(4))
    assert verdict.legal and not verdict.violations


def test_intermediate_source_detected():
    # Column 2 empty but row 2 active: node 2 has no parents.
    matrix = OperationMatrix(4, {(1, 3): 2, (2, 3): 1, (2, 4): 2, (3, 4): 2})
    verdict = validate_structure(matrix)
    assert not verdict.legal
    assert Violation(2, "IntermediateSource") in verdict.violations


def test_entry_sink_detected():
    # Row 1 empty: the block input flows nowhere.
    matrix = OperationMatrix(4, {(2, 3): 2, (2, 4): 2, (3, 4): 2})
    verdict = validate_structure(matrix)
    assert not verdict.legal
    assert Violation(1, "DisconnectedEntry") in verdict.violations


def test_all_none_matrix_fully_illegal():
    verdict = validate_structure(OperationMatrix(3, {}))
    kinds = {(v.node, v.kind) for v in verdict.violations}
    assert not verdict.legal
    assert kinds == {
        (1, "DisconnectedEntry"),
        (2, "IntermediateSource"),
        (2, "IntermediateSink"),
        (3, "DisconnectedExit"),
    }


@pytest.mark.parametrize("nodes", [2, 3, 4, 5, 6])
def test_shifted_diagonal_breaks_when_any_edge_removed(nodes):
    assert validate_structure(shifted_diagonal(nodes)).legal
    for drop in range(1, nodes):
        entries = {(i, i + 1): 2 for i in range(1, nodes) if i != drop}
        assert not validate_structure(OperationMatrix(nodes, entries)).legal


def test_exhaustive_three_node_agreement_with_reachability_oracle():
    mismatches = 0
    for ops in itertools.product(range(7), repeat=3):
        matrix = matrix_from_ops(ops, nodes=3)
        if validate_structure(matrix).legal != reachability_oracle(matrix):
            mismatches += 1
    assert mismatches == 0


def test_operation_param_counts():
    assert operation_param_count(6, 64, 64) == 0
    assert operation_param_count(0, 64, 64) == 0
    assert operation_param_count(1, 8, 8) == 1 * 64 + 8 + 16 == 88
    assert operation_param_count(2, 4, 4) == 27 * 16 + 4 + 8 == 444


def test_operation_param_count_monotone():
    kernels = {1: 1, 2: 3, 3: 5}
    for code in (1, 2, 3, 4, 5):
        assert operation_param_count(code, 8, 8) < operation_param_count(code, 9, 8)
        assert operation_param_count(code, 8, 8) < operation_param_count(code, 8, 9)
    # Larger kernel at equal dilation costs more.
    assert operation_param_count(1, 8, 8) < operation_param_count(2, 8, 8) \
        < operation_param_count(3, 8, 8)


def test_dilation_does_not_change_count():
    assert operation_param_count(2, 8, 8) == operation_param_count(4, 8, 8)
    assert operation_param_count(3, 8, 8) == operation_param_count(5, 8, 8)


def test_operation_param_count_errors():
    with pytest.raises(BlockError):
        operation_param_count(9, 8, 8)
    with pytest.raises(BlockError):
        operation_param_count(2, 0, 8)


def test_render_matrix_grid():
    text = render_matrix(matrix_from_ops([2, 0, 2], nodes=3))
    assert text.splitlines() == ["0 2 0", "0 0 2", "0 0 0"]


def test_matrix_rejects_lower_triangle():
    with pytest.raises(BlockError):
        OperationMatrix(3, {(2, 1): 2})
    with pytest.raises(BlockError):
        OperationMatrix(1, {})

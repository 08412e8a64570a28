"""Block structure encoding: a DAG stored as an upper-triangular operation matrix.

Nodes are feature maps, directed edges are operations. Entry (i, j) of the
matrix, 1 <= i < j <= nodes, names the operation applied to node i's output
on its way into node j; contributions arriving at one node are summed. Zero
means no edge. Acyclicity holds by construction since only the strict upper
triangle exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence


class BlockError(ValueError):
    """A matrix, ops vector, or operation code violates its contract."""


@dataclass(frozen=True)
class Operation:
    """One edge operation: either nothing, a k^3 convolution, or an identity skip."""

    code: int
    label: str
    kernel: int  # 0 for non-convolutions
    dilation: int


#: Code table: 0 none, 1..5 convolutions Conv(kernel, dilation), 6 identity skip.
OPERATIONS = (
    Operation(0, "none", 0, 0),
    Operation(1, "conv1d1", 1, 1),
    Operation(2, "conv3d1", 3, 1),
    Operation(3, "conv5d1", 5, 1),
    Operation(4, "conv3d2", 3, 2),
    Operation(5, "conv5d2", 5, 2),
    Operation(6, "skip", 0, 0),
)

OP_NONE = 0
OP_SKIP = 6
NUM_OP_CODES = len(OPERATIONS)

VIOLATION_INTERMEDIATE_SOURCE = "IntermediateSource"
VIOLATION_INTERMEDIATE_SINK = "IntermediateSink"
VIOLATION_DISCONNECTED_ENTRY = "DisconnectedEntry"
VIOLATION_DISCONNECTED_EXIT = "DisconnectedExit"


def operation(code: int) -> Operation:
    if not 0 <= code < NUM_OP_CODES:
        raise BlockError(f"operation code {code} outside [0, {NUM_OP_CODES})")
    return OPERATIONS[code]


def triangle_size(nodes: int) -> int:
    """Entries in the strict upper triangle of a nodes x nodes matrix."""
    return nodes * (nodes - 1) // 2


@dataclass(frozen=True)
class OperationMatrix:
    """Strictly upper-triangular map (i, j) -> operation code; absent means none."""

    nodes: int
    entries: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.nodes < 2:
            raise BlockError(f"a block needs at least 2 nodes, got {self.nodes}")
        cleaned = {}
        for (i, j), code in self.entries.items():
            if not (1 <= i < j <= self.nodes):
                raise BlockError(f"entry ({i}, {j}) outside the strict upper triangle")
            operation(code)
            if code != OP_NONE:
                cleaned[(i, j)] = code
        object.__setattr__(self, "entries", cleaned)

    def get(self, i: int, j: int) -> int:
        return self.entries.get((i, j), OP_NONE)

    def active_edges(self) -> list[tuple[int, int, int]]:
        """Non-none edges as (source, destination, code), column-major order."""
        out = []
        for j in range(2, self.nodes + 1):
            for i in range(1, j):
                code = self.get(i, j)
                if code != OP_NONE:
                    out.append((i, j, code))
        return out


@dataclass(frozen=True)
class Violation:
    node: int
    kind: str


@dataclass(frozen=True)
class LegalityVerdict:
    legal: bool
    violations: tuple[Violation, ...]


def matrix_from_ops(ops: Sequence[int], nodes: int) -> OperationMatrix:
    """Fill the upper triangle from a flat ops vector, column by column.

    The fill order is (1,2); (1,3), (2,3); (1,4), (2,4), (3,4); ... so the
    entries consumed for a given node count form a prefix of the vector and
    trailing codes are ignored when nodes is below its maximum.
    """
    if nodes < 2:
        raise BlockError(f"a block needs at least 2 nodes, got {nodes}")
    needed = triangle_size(nodes)
    if len(ops) < needed:
        raise BlockError(f"{nodes} nodes need {needed} ops, got {len(ops)}")
    entries = {}
    k = 0
    for j in range(2, nodes + 1):
        for i in range(1, j):
            code = int(ops[k])
            operation(code)
            k += 1
            if code != OP_NONE:
                entries[(i, j)] = code
    return OperationMatrix(nodes=nodes, entries=entries)


def validate_structure(matrix: OperationMatrix) -> LegalityVerdict:
    """Check that no intermediate node is a source or a sink.

    A source shows up as an all-zero column, a sink as an all-zero row. The
    first node owns the block input so its row must be nonzero; the last node
    owns the block output so its column must be nonzero. There is no column
    for node 1 and no row requirement for the last node.
    """
    n = matrix.nodes
    violations = []
    for node in range(1, n + 1):
        row_empty = node < n and all(
            matrix.get(node, j) == OP_NONE for j in range(node + 1, n + 1)
        )
        col_empty = node > 1 and all(
            matrix.get(i, node) == OP_NONE for i in range(1, node)
        )
        if node == 1:
            if row_empty:
                violations.append(Violation(1, VIOLATION_DISCONNECTED_ENTRY))
        elif node == n:
            if col_empty:
                violations.append(Violation(n, VIOLATION_DISCONNECTED_EXIT))
        else:
            if col_empty:
                violations.append(Violation(node, VIOLATION_INTERMEDIATE_SOURCE))
            if row_empty:
                violations.append(Violation(node, VIOLATION_INTERMEDIATE_SINK))
    return LegalityVerdict(legal=not violations, violations=tuple(violations))


def operation_param_count(code: int, c_in: int, c_out: int) -> int:
    """Trainable parameters of one edge operation.

    A convolution carries kernel^3 * c_in * c_out weights plus c_out bias,
    and its normalization adds a scale and a shift per output channel.
    Dilation changes the receptive field, not the count. None and skip are
    parameter-free.
    """
    if c_in < 1 or c_out < 1:
        raise BlockError(f"channel counts must be positive, got {c_in}, {c_out}")
    op = operation(code)
    if op.kernel == 0:
        return 0
    return op.kernel ** 3 * c_in * c_out + c_out + 2 * c_out


def render_matrix(matrix: OperationMatrix) -> str:
    """Fixed-width grid, rows are source nodes and columns destination nodes."""
    width = max(
        len(str(code)) for code in list(matrix.entries.values()) + [0]
    )
    lines = []
    for i in range(1, matrix.nodes + 1):
        cells = [
            f"{matrix.get(i, j) if i < j else 0:>{width}}"
            for j in range(1, matrix.nodes + 1)
        ]
        lines.append(" ".join(cells))
    return "\n".join(lines)

"""Encoder-decoder network construction from a decoded configuration.

The layer graph follows a U-shaped layout: an input stem convolution, p
encoder stages (block, pool, channel-doubling transition), one bottleneck
block, and p decoder stages (upsample, concatenation with the copied
encoder output, channel-reducing transition, block). Every block lives
inside a MegaBlock wrapper: spatial dropout plus an optional residual sum.
Channel counts double with each pooling and mirror back down the decoder.

The result is a flat intermediate representation (IR): tensors plus layers
in topological order, serializable to a canonical JSON document that
external trainers consume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .blocks import (
    OP_SKIP,
    OperationMatrix,
    matrix_from_ops,
    operation,
    validate_structure,
)
from .spaces import DecodedConfig

IR_VERSION = 1
DROPOUT_RATE = 0.2
DEFAULT_NUM_CLASSES = 20
DEFAULT_ELEMENT_BYTES = 4
DEFAULT_BATCH_PER_DEVICE = 1
DEFAULT_MEMORY_BUDGET_BYTES = 16 * 2 ** 30


class ArchError(ValueError):
    """A configuration cannot be realized as a network."""


@dataclass(frozen=True)
class ArchConfig:
    decoded: DecodedConfig
    input_shape: tuple[int, int, int] = (128, 128, 128)
    in_channels: int = 1
    num_classes: int = DEFAULT_NUM_CLASSES


@dataclass(frozen=True)
class TensorInfo:
    id: str
    shape: tuple[int, int, int]
    channels: int


@dataclass(frozen=True)
class Layer:
    kind: str
    inputs: tuple[str, ...]
    output: str
    attrs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NetworkIR:
    config: DecodedConfig
    input_shape: tuple[int, int, int]
    in_channels: int
    num_classes: int
    tensors: tuple[TensorInfo, ...]
    layers: tuple[Layer, ...]
    main_output: str
    aux_outputs: tuple[str, ...]

    @property
    def input_id(self) -> str:
        return self.tensors[0].id

    def tensor_map(self) -> dict[str, TensorInfo]:
        return {t.id: t for t in self.tensors}


@dataclass(frozen=True)
class ResourceEstimate:
    trainable_parameters: int
    peak_activation_bytes: int
    oom: bool


class _IRBuilder:
    def __init__(self, shape, in_channels):
        self.tensors: list[TensorInfo] = []
        self.layers: list[Layer] = []
        self.input_id = self._tensor(shape, in_channels)

    def _tensor(self, shape, channels) -> str:
        tid = f"t{len(self.tensors)}"
        self.tensors.append(TensorInfo(tid, tuple(shape), channels))
        return tid

    def emit(self, kind, inputs, shape, channels, **attrs) -> str:
        out = self._tensor(shape, channels)
        self.layers.append(Layer(kind, tuple(inputs), out, dict(attrs)))
        return out

    def shape_of(self, tid) -> tuple[int, int, int]:
        return self.tensors[int(tid[1:])].shape

    def channels_of(self, tid) -> int:
        return self.tensors[int(tid[1:])].channels


def _conv_norm_act(builder, tid, out_channels, kernel, dilation, scope):
    """Convolution followed by normalization and activation, shape preserved."""
    shape = builder.shape_of(tid)
    conv = builder.emit(
        "Conv", [tid], shape, out_channels,
        kernel=kernel, dilation=dilation, scope=scope,
    )
    norm = builder.emit("Norm", [conv], shape, out_channels, scope=scope)
    return builder.emit("Act", [norm], shape, out_channels, scope=scope)


def _mega_block(builder, tid, matrix: OperationMatrix, residual: bool, scope: str):
    """Block DAG at a single channel width, wrapped with dropout and residual."""
    channels = builder.channels_of(tid)
    shape = builder.shape_of(tid)
    node_tensor = {1: tid}
    for dest in range(2, matrix.nodes + 1):
        contributions = []
        for src in range(1, dest):
            code = matrix.get(src, dest)
            if code == 0:
                continue
            if code == OP_SKIP:
                contributions.append(node_tensor[src])
            else:
                op = operation(code)
                contributions.append(_conv_norm_act(
                    builder, node_tensor[src], channels,
                    op.kernel, op.dilation, f"{scope}.e{src}-{dest}",
                ))
        if not contributions:
            raise ArchError(f"node {dest} has no inputs; matrix is illegal")
        if len(contributions) == 1:
            node_tensor[dest] = contributions[0]
        else:
            node_tensor[dest] = builder.emit(
                "Sum", contributions, shape, channels, scope=scope,
            )
    dropped = builder.emit(
        "Dropout", [node_tensor[matrix.nodes]], shape, channels,
        rate=DROPOUT_RATE, scope=scope,
    )
    if residual:
        return builder.emit("Sum", [tid, dropped], shape, channels, scope=scope)
    return dropped


def build_network(config: ArchConfig) -> NetworkIR:
    """Realize the full segmentation network IR for one decoded configuration."""
    d = config.decoded
    if config.num_classes < 2:
        raise ArchError(f"need at least 2 classes, got {config.num_classes}")
    if config.in_channels < 1:
        raise ArchError(f"need at least 1 input channel, got {config.in_channels}")
    stride = 2 ** d.p
    for extent in config.input_shape:
        if extent < 1 or extent % stride:
            raise ArchError(
                f"input shape {config.input_shape} not divisible by 2^p = {stride}"
            )
    matrix = matrix_from_ops(d.ops, d.nodes)
    verdict = validate_structure(matrix)
    if not verdict.legal:
        details = ", ".join(f"{v.kind}@{v.node}" for v in verdict.violations)
        raise ArchError(f"illegal block structure: {details}")

    builder = _IRBuilder(config.input_shape, config.in_channels)
    cur = _conv_norm_act(builder, builder.input_id, d.n, 3, 1, "stem")

    skips = []
    for level in range(d.p):
        channels = d.n * 2 ** level
        cur = _mega_block(builder, cur, matrix, bool(d.res), f"enc{level}")
        skips.append(cur)
        shape = tuple(e // 2 for e in builder.shape_of(cur))
        cur = builder.emit(
            "MaxPool", [cur], shape, channels,
            kernel=2, stride=2, scope=f"enc{level}",
        )
        cur = _conv_norm_act(builder, cur, channels * 2, 1, 1, f"enc{level}.widen")

    cur = _mega_block(builder, cur, matrix, bool(d.res), "bottleneck")

    aux_outputs = []
    for level in range(d.p - 1, -1, -1):
        channels = d.n * 2 ** level
        shape = tuple(e * 2 for e in builder.shape_of(cur))
        cur = builder.emit(
            "Upsample", [cur], shape, builder.channels_of(cur),
            factor=2, scope=f"dec{level}",
        )
        skip = skips[level]
        if builder.shape_of(skip) != shape:
            raise ArchError("decoder shape does not match encoder copy")
        cur = builder.emit(
            "Concat", [cur, skip], shape,
            builder.channels_of(cur) + channels, scope=f"dec{level}",
        )
        cur = _conv_norm_act(builder, cur, channels, 1, 1, f"dec{level}.narrow")
        cur = _mega_block(builder, cur, matrix, bool(d.res), f"dec{level}")
        if d.sup and level > 0:
            head = builder.emit(
                "AuxHead", [cur], shape, config.num_classes,
                kernel=1, scope=f"aux{level}",
            )
            full = builder.emit(
                "Upsample", [head], config.input_shape, config.num_classes,
                factor=2 ** level, scope=f"aux{level}",
            )
            aux_outputs.append(full)

    main = builder.emit(
        "Head", [cur], config.input_shape, config.num_classes,
        kernel=1, scope="head",
    )
    return NetworkIR(
        config=d,
        input_shape=tuple(config.input_shape),
        in_channels=config.in_channels,
        num_classes=config.num_classes,
        tensors=tuple(builder.tensors),
        layers=tuple(builder.layers),
        main_output=main,
        aux_outputs=tuple(aux_outputs),
    )


def count_parameters(ir: NetworkIR) -> int:
    """Trainable parameters summed over the IR.

    Convolutions carry weights and a bias, normalizations a scale and shift
    per channel, heads a 1x1x1 convolution with bias. Everything else is
    parameter-free.
    """
    channels = {t.id: t.channels for t in ir.tensors}
    total = 0
    for layer in ir.layers:
        c_out = channels[layer.output]
        if layer.kind == "Conv":
            c_in = channels[layer.inputs[0]]
            k = layer.attrs["kernel"]
            total += k ** 3 * c_in * c_out + c_out
        elif layer.kind == "Norm":
            total += 2 * c_out
        elif layer.kind in ("Head", "AuxHead"):
            c_in = channels[layer.inputs[0]]
            k = layer.attrs.get("kernel", 1)
            total += k ** 3 * c_in * c_out + c_out
    return total


def tensor_bytes(shape, channels, element_bytes=DEFAULT_ELEMENT_BYTES) -> int:
    """Bytes one activation tensor occupies for a single sample."""
    return math.prod(shape) * channels * element_bytes


def estimate_peak_memory(
    ir: NetworkIR,
    element_bytes: int = DEFAULT_ELEMENT_BYTES,
    batch_per_device: int = DEFAULT_BATCH_PER_DEVICE,
    budget_bytes: int = DEFAULT_MEMORY_BUDGET_BYTES,
) -> ResourceEstimate:
    """Peak live-activation bytes under the IR's topological order.

    A tensor is live from the step that produces it (the network input from
    the start) until its last consumer; network outputs stay live to the
    end. The peak is the largest live-set total across layer steps, for one
    sample; the OOM flag compares peak times batch against the budget.
    """
    info = ir.tensor_map()
    produced = {ir.input_id: -1}
    last_use = {tid: -1 for tid in info}
    for step, layer in enumerate(ir.layers):
        produced[layer.output] = step
        for tid in layer.inputs:
            last_use[tid] = step
    horizon = len(ir.layers)
    for tid in (ir.main_output, *ir.aux_outputs):
        last_use[tid] = horizon
    peak = 0
    for step in range(len(ir.layers)):
        live = sum(
            tensor_bytes(info[tid].shape, info[tid].channels, element_bytes)
            for tid in info
            if produced.get(tid, horizon + 1) <= step <= last_use[tid]
        )
        peak = max(peak, live)
    return ResourceEstimate(
        trainable_parameters=count_parameters(ir),
        peak_activation_bytes=peak,
        oom=peak * batch_per_device > budget_bytes,
    )


def ir_to_dict(ir: NetworkIR) -> dict:
    return {
        "version": IR_VERSION,
        "config": ir.config.as_dict(),
        "input": {"shape": list(ir.input_shape), "channels": ir.in_channels},
        "num_classes": ir.num_classes,
        "tensors": [
            {"id": t.id, "shape": list(t.shape), "channels": t.channels}
            for t in ir.tensors
        ],
        "layers": [
            {
                "kind": l.kind,
                "inputs": list(l.inputs),
                "output": l.output,
                "attrs": l.attrs,
            }
            for l in ir.layers
        ],
        "outputs": {"main": ir.main_output, "aux": list(ir.aux_outputs)},
    }


def serialize_ir(ir: NetworkIR) -> str:
    """Canonical JSON: sorted keys, compact separators, stable byte-for-byte."""
    return json.dumps(ir_to_dict(ir), sort_keys=True, separators=(",", ":"))


def ir_from_dict(doc: dict) -> NetworkIR:
    if doc.get("version") != IR_VERSION:
        raise ArchError(f"unsupported IR version {doc.get('version')!r}")
    return NetworkIR(
        config=DecodedConfig.from_dict(doc["config"]),
        input_shape=tuple(doc["input"]["shape"]),
        in_channels=int(doc["input"]["channels"]),
        num_classes=int(doc["num_classes"]),
        tensors=tuple(
            TensorInfo(t["id"], tuple(t["shape"]), int(t["channels"]))
            for t in doc["tensors"]
        ),
        layers=tuple(
            Layer(l["kind"], tuple(l["inputs"]), l["output"], dict(l["attrs"]))
            for l in doc["layers"]
        ),
        main_output=doc["outputs"]["main"],
        aux_outputs=tuple(doc["outputs"]["aux"]),
    )


def parse_ir(text: str) -> NetworkIR:
    return ir_from_dict(json.loads(text))

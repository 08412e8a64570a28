"""Parsing and validation of the network IR wire document.

The trainer is a separate program from the search engine and speaks to it
only through this JSON schema, so parsing is self-contained here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SUPPORTED_VERSION = 1
KNOWN_KINDS = {
    "Conv", "Norm", "Act", "MaxPool", "Upsample",
    "Sum", "Concat", "Dropout", "Head", "AuxHead",
}


class IRError(ValueError):
    """The IR document is malformed or self-inconsistent."""


@dataclass(frozen=True)
class IRTensor:
    id: str
    shape: tuple[int, int, int]
    channels: int


@dataclass(frozen=True)
class IRLayer:
    kind: str
    inputs: tuple[str, ...]
    output: str
    attrs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ParsedIR:
    input_id: str
    input_shape: tuple[int, int, int]
    in_channels: int
    num_classes: int
    pools: int
    tensors: dict[str, IRTensor]
    layers: tuple[IRLayer, ...]
    main_output: str
    aux_outputs: tuple[str, ...]


def parse_ir(doc: dict) -> ParsedIR:
    if not isinstance(doc, dict):
        raise IRError("IR document must be a JSON object")
    if doc.get("version") != SUPPORTED_VERSION:
        raise IRError(f"unsupported IR version {doc.get('version')!r}")
    try:
        tensors = {
            t["id"]: IRTensor(t["id"], tuple(t["shape"]), int(t["channels"]))
            for t in doc["tensors"]
        }
        layers = tuple(
            IRLayer(l["kind"], tuple(l["inputs"]), l["output"], dict(l.get("attrs", {})))
            for l in doc["layers"]
        )
        input_shape = tuple(doc["input"]["shape"])
        in_channels = int(doc["input"]["channels"])
        num_classes = int(doc["num_classes"])
        main = doc["outputs"]["main"]
        aux = tuple(doc["outputs"]["aux"])
        pools = int(doc["config"]["p"])
    except (KeyError, TypeError) as exc:
        raise IRError(f"IR document missing or mistyped field: {exc}") from None

    if not tensors:
        raise IRError("IR has no tensors")
    input_id = doc["tensors"][0]["id"]
    produced = {input_id}
    for layer in layers:
        if layer.kind not in KNOWN_KINDS:
            raise IRError(f"unknown layer kind {layer.kind!r}")
        for tid in layer.inputs:
            if tid not in produced:
                raise IRError(f"layer consumes {tid} before it is produced")
            if tid not in tensors:
                raise IRError(f"layer references unknown tensor {tid}")
        if layer.output not in tensors:
            raise IRError(f"layer produces unknown tensor {layer.output}")
        produced.add(layer.output)
    for tid in (main, *aux):
        if tid not in produced:
            raise IRError(f"declared output {tid} is never produced")
    if len(input_shape) != 3 or any(e < 1 for e in input_shape):
        raise IRError(f"bad input shape {input_shape}")
    return ParsedIR(
        input_id=input_id,
        input_shape=input_shape,
        in_channels=in_channels,
        num_classes=num_classes,
        pools=pools,
        tensors=tensors,
        layers=layers,
        main_output=main,
        aux_outputs=aux,
    )


def activation_footprint_bytes(ir: ParsedIR, batch: int, element_bytes: int = 4) -> int:
    """Coarse training-memory estimate: activations plus gradients for all tensors."""
    voxels = sum(
        t.shape[0] * t.shape[1] * t.shape[2] * t.channels for t in ir.tensors.values()
    )
    return 2 * voxels * batch * element_bytes

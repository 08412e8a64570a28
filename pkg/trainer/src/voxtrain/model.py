"""Torch realization of a parsed network IR.

Each IR layer maps to one torch module or a functional join; the forward
pass walks the layer list in its topological order. Convolutions pad to
preserve spatial shape (padding = dilation * (kernel - 1) / 2) and carry
bias; normalizations are affine batch norms, so the trainable-parameter
count matches the engine's accounting exactly.
"""

from __future__ import annotations

import torch
from torch import nn

from .ir import IRError, ParsedIR


class GraphNet(nn.Module):
    def __init__(self, ir: ParsedIR):
        super().__init__()
        self.ir = ir
        modules = {}
        for index, layer in enumerate(ir.layers):
            c_out = ir.tensors[layer.output].channels
            name = f"l{index}"
            if layer.kind == "Conv":
                c_in = ir.tensors[layer.inputs[0]].channels
                kernel = int(layer.attrs["kernel"])
                dilation = int(layer.attrs.get("dilation", 1))
                modules[name] = nn.Conv3d(
                    c_in, c_out, kernel,
                    padding=dilation * (kernel - 1) // 2,
                    dilation=dilation, bias=True,
                )
            elif layer.kind in ("Head", "AuxHead"):
                c_in = ir.tensors[layer.inputs[0]].channels
                kernel = int(layer.attrs.get("kernel", 1))
                modules[name] = nn.Conv3d(c_in, c_out, kernel, bias=True)
            elif layer.kind == "Norm":
                modules[name] = nn.BatchNorm3d(c_out)
            elif layer.kind == "Act":
                modules[name] = nn.ReLU()
            elif layer.kind == "MaxPool":
                modules[name] = nn.MaxPool3d(int(layer.attrs.get("kernel", 2)),
                                             stride=int(layer.attrs.get("stride", 2)))
            elif layer.kind == "Upsample":
                modules[name] = nn.Upsample(
                    scale_factor=int(layer.attrs.get("factor", 2)), mode="nearest")
            elif layer.kind == "Dropout":
                modules[name] = nn.Dropout3d(float(layer.attrs.get("rate", 0.2)))
            elif layer.kind not in ("Sum", "Concat"):
                raise IRError(f"unsupported layer kind {layer.kind!r}")
        self.ops = nn.ModuleDict(modules)

    def forward(self, x: torch.Tensor):
        values = {self.ir.input_id: x}
        for index, layer in enumerate(self.ir.layers):
            inputs = [values[tid] for tid in layer.inputs]
            if layer.kind == "Sum":
                out = inputs[0]
                for extra in inputs[1:]:
                    out = out + extra
            elif layer.kind == "Concat":
                out = torch.cat(inputs, dim=1)
            else:
                out = self.ops[f"l{index}"](inputs[0])
            values[layer.output] = out
        main = values[self.ir.main_output]
        aux = [values[tid] for tid in self.ir.aux_outputs]
        return main, aux


def trainable_parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)

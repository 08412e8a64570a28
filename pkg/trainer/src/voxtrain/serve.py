"""Wire-protocol entry point: one training request per process.

Reads a single JSON request document from standard input (single-line or
pretty form), trains the described network on synthetic volumes, and
writes exactly one reply document to standard output:

    {"status": "ok", "dice": <validation dice>, "meta": {...}}
    {"status": "oom"}
    {"status": "error", "detail": "..."}

Diagnostics go to standard error. ``--selftest`` instead checks the
packaged golden IRs for parameter parity with their recorded counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

import numpy as np
import torch
from torch import nn

from .data import augment_volume, generate_synthetic_dataset
from .ir import IRError, activation_footprint_bytes, parse_ir
from .metrics import compute_mean_dice
from .model import GraphNet, trainable_parameter_count

DEFAULT_MEMORY_CAP_BYTES = 2 ** 30
LEARNING_RATE = 1e-3


def _soft_dice_loss(logits, target, classes):
    probs = torch.softmax(logits, dim=1)
    one_hot = torch.nn.functional.one_hot(target, classes).permute(0, 4, 1, 2, 3)
    dims = (0, 2, 3, 4)
    intersection = (probs * one_hot).sum(dims)
    denominator = probs.sum(dims) + one_hot.sum(dims)
    dice = (2.0 * intersection + 1e-5) / (denominator + 1e-5)
    return 1.0 - dice.mean()


def _head_loss(logits, target, classes):
    ce = torch.nn.functional.cross_entropy(logits, target)
    return 0.5 * _soft_dice_loss(logits, target, classes) + 0.5 * ce


def _standardize(image: np.ndarray) -> np.ndarray:
    return ((image - image.mean()) / (image.std() + 1e-6)).astype(np.float32)


def train_model(model, dataset, epochs, batch, seed, augment=False):
    """Train in place; returns the per-epoch mean loss history."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=LEARNING_RATE)
    classes = dataset.classes
    history = []
    model.train()
    for _ in range(epochs):
        losses = []
        for start in range(0, len(dataset.train_indices), batch):
            chunk = dataset.train_indices[start:start + batch]
            if len(chunk) == 1 and len(dataset.train_indices) > 1:
                # Batch norm needs more than one value per channel; a lone
                # trailing sample can collapse to exactly one at a fully
                # pooled bottleneck.
                continue
            images, labels = [], []
            for index in chunk:
                image = dataset.images[index, 0]
                label = dataset.labels[index]
                if augment:
                    image, label = augment_volume(image, label, rng)
                images.append(_standardize(image)[None])
                labels.append(label)
            x = torch.from_numpy(np.stack(images))
            y = torch.from_numpy(np.stack(labels))
            optimizer.zero_grad()
            main, aux = model(x)
            losses_per_head = [_head_loss(main, y, classes)]
            losses_per_head += [_head_loss(a, y, classes) for a in aux]
            loss = torch.stack(losses_per_head).mean()
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        history.append(float(np.mean(losses)))
    return history


def validate_model(model, dataset):
    """Mean foreground dice over the validation split."""
    model.eval()
    scores = []
    with torch.no_grad():
        for index in dataset.val_indices:
            x = torch.from_numpy(_standardize(dataset.images[index, 0])[None, None])
            main, _ = model(x)
            prediction = main.argmax(dim=1)[0].numpy()
            scores.append(compute_mean_dice(
                prediction, dataset.labels[index], dataset.classes))
    return float(np.mean(scores))


def handle_request(request: dict, memory_cap_bytes: int) -> dict:
    ir = parse_ir(request.get("ir"))
    train = request.get("train") or {}
    data = train.get("data") or {}
    epochs = int(train.get("epochs", 5))
    batch = int(train.get("batch", 3))
    seed = int(train.get("seed", 0))
    shape = tuple(data.get("shape", ir.input_shape))
    classes = int(data.get("classes", ir.num_classes))
    volumes = int(data.get("volumes", 8))
    augment = bool(data.get("augment", False))

    if classes != ir.num_classes:
        raise IRError(
            f"request classes {classes} do not match IR num_classes {ir.num_classes}")
    stride = 2 ** ir.pools
    if any(extent % stride for extent in shape):
        raise IRError(f"volume shape {shape} not divisible by 2^p = {stride}")

    if activation_footprint_bytes(ir, batch) > memory_cap_bytes:
        return {"status": "oom"}

    dataset = generate_synthetic_dataset(shape, classes, volumes, seed, augment)
    try:
        model = GraphNet(ir)
        train_model(model, dataset, epochs, batch, seed, augment)
        dice = validate_model(model, dataset)
    except MemoryError:
        return {"status": "oom"}
    except RuntimeError as exc:
        if "memory" in str(exc).lower():
            return {"status": "oom"}
        raise
    return {
        "status": "ok",
        "dice": dice,
        "meta": {
            "loss": "dice+cross_entropy",
            "optimizer": "adam",
            "learning_rate": LEARNING_RATE,
            "parameters": trainable_parameter_count(model),
            "epochs": epochs,
        },
    }


def run_selftest() -> int:
    failures = 0
    golden_dir = resources.files("voxtrain") / "golden"
    names = sorted(p.name for p in golden_dir.iterdir() if p.name.endswith(".json"))
    if not names:
        print("selftest: no golden IRs packaged", file=sys.stderr)
        return 1
    for name in names:
        doc = json.loads((golden_dir / name).read_text(encoding="utf-8"))
        model = GraphNet(parse_ir(doc["ir"]))
        counted = trainable_parameter_count(model)
        expected = doc["expected_parameters"]
        status = "ok" if counted == expected else "MISMATCH"
        print(f"selftest {name}: runtime {counted} expected {expected} {status}",
              file=sys.stderr)
        failures += counted != expected
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="voxtrain", description=__doc__)
    parser.add_argument("--memory-cap-bytes", type=int,
                        default=DEFAULT_MEMORY_CAP_BYTES,
                        help="training footprint above this replies oom")
    parser.add_argument("--selftest", action="store_true",
                        help="check packaged golden IRs for parameter parity")
    args = parser.parse_args(argv)

    if args.selftest:
        return run_selftest()

    try:
        request = json.loads(sys.stdin.read())
        reply = handle_request(request, args.memory_cap_bytes)
    except Exception as exc:
        print(json.dumps({"status": "error", "detail": str(exc)}))
        return 1
    print(json.dumps(reply, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

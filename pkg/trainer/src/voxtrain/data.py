"""Synthetic labeled volumes: ellipsoidal structures on a noisy background.

Each volume contains one non-overlapping ellipsoid per foreground class
with a class-specific intensity band, so every class is present in every
volume and a small network can realistically segment the data. Generation
is fully determined by the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass
class SyntheticDataset:
    images: np.ndarray  # (volumes, 1, d, h, w) float32
    labels: np.ndarray  # (volumes, d, h, w) int64
    train_indices: list[int]
    val_indices: list[int]
    classes: int


def _ellipsoid_mask(shape, center, semi_axes):
    grids = np.ogrid[tuple(slice(0, e) for e in shape)]
    value = sum(((g - c) / s) ** 2 for g, c, s in zip(grids, center, semi_axes))
    return value <= 1.0


def _place_ellipsoids(shape, classes, rng):
    """One ellipsoid per foreground class, rejection-sampled to avoid overlap."""
    labels = np.zeros(shape, dtype=np.int64)
    min_extent = min(shape)
    for label in range(1, classes):
        placed = False
        for attempt in range(40):
            shrink = 1.0 / (1 + attempt // 10)
            semi = rng.uniform(min_extent / 5.5, min_extent / 2.8, size=3) * shrink
            semi = np.maximum(semi, 1.2)
            center = rng.uniform(semi, np.array(shape) - semi)
            mask = _ellipsoid_mask(shape, center, semi)
            if mask.sum() == 0:
                continue
            if not (labels[mask] != 0).any():
                labels[mask] = label
                placed = True
                break
        if not placed:
            raise ValueError(
                f"could not place class {label} in volume of shape {shape}"
            )
    return labels


def generate_synthetic_dataset(shape, classes, volumes, seed, augment=False):
    """Build `volumes` labeled images; split indices are seed-deterministic."""
    if classes < 2:
        raise ValueError("need at least 2 classes")
    if min(shape) < 8:
        raise ValueError("extents below 8 voxels cannot hold distinct structures")
    if volumes < 2:
        raise ValueError("need at least 2 volumes for a train/validation split")
    rng = np.random.default_rng(seed)
    images = np.empty((volumes, 1, *shape), dtype=np.float32)
    labels = np.empty((volumes, *shape), dtype=np.int64)
    for v in range(volumes):
        lab = _place_ellipsoids(shape, classes, rng)
        img = rng.normal(0.1, 0.05, size=shape)
        for label in range(1, classes):
            intensity = 0.35 + 0.6 * (label - 1) / max(classes - 2, 1)
            img = np.where(lab == label, rng.normal(intensity, 0.05, size=shape), img)
        images[v, 0] = img.astype(np.float32)
        labels[v] = lab
    order = rng.permutation(volumes).tolist()
    val_count = max(1, volumes // 4)
    return SyntheticDataset(
        images=images,
        labels=labels,
        train_indices=order[val_count:],
        val_indices=order[:val_count],
        classes=classes,
    )


def augment_volume(image, label, rng):
    """Axial rotation up to 30 degrees, shift up to 20%, scale in [0.8, 1.2].

    Applied with 80% probability; images interpolate linearly, labels by
    nearest neighbor so the class set is preserved.
    """
    if rng.random() >= 0.8:
        return image, label
    angle = rng.uniform(-30.0, 30.0)
    scale = rng.uniform(0.8, 1.2)
    shape = np.array(label.shape, dtype=float)
    shift = rng.uniform(-0.2, 0.2, size=3) * shape

    theta = np.deg2rad(angle)
    rotation = np.array([
        [1.0, 0.0, 0.0],
        [0.0, np.cos(theta), -np.sin(theta)],
        [0.0, np.sin(theta), np.cos(theta)],
    ])
    matrix = rotation / scale
    center = (shape - 1) / 2.0
    offset = center - matrix @ center + shift

    def warp(volume, order):
        return ndimage.affine_transform(
            volume, matrix, offset=offset, order=order, mode="nearest")

    return warp(image, 1).astype(np.float32), warp(label, 0).astype(np.int64)

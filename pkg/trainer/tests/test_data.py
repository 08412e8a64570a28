import numpy as np
import pytest

from voxtrain.data import augment_volume, generate_synthetic_dataset


def test_generation_deterministic():
    a = generate_synthetic_dataset((8, 8, 8), 3, 6, seed=4)
    b = generate_synthetic_dataset((8, 8, 8), 3, 6, seed=4)
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.labels, b.labels)
    assert a.train_indices == b.train_indices
    assert a.val_indices == b.val_indices


def test_different_seeds_differ():
    a = generate_synthetic_dataset((8, 8, 8), 3, 6, seed=4)
    b = generate_synthetic_dataset((8, 8, 8), 3, 6, seed=5)
    assert not np.array_equal(a.labels, b.labels)


def test_every_class_in_every_volume():
    dataset = generate_synthetic_dataset((12, 12, 12), 4, 8, seed=1)
    for volume in dataset.labels:
        assert set(np.unique(volume)) == {0, 1, 2, 3}


def test_two_class_volume_fraction_bounds():
    dataset = generate_synthetic_dataset((8, 8, 8), 2, 4, seed=0)
    for volume in dataset.labels:
        fraction = (volume == 1).mean()
        assert 0.0 < fraction < 0.5


def test_split_covers_all_volumes():
    dataset = generate_synthetic_dataset((8, 8, 8), 3, 9, seed=2)
    indices = sorted(dataset.train_indices + dataset.val_indices)
    assert indices == list(range(9))
    assert len(dataset.val_indices) >= 1
    assert len(dataset.train_indices) > len(dataset.val_indices)


def test_foreground_intensity_separates_from_background():
    dataset = generate_synthetic_dataset((12, 12, 12), 3, 4, seed=3)
    image, label = dataset.images[0, 0], dataset.labels[0]
    assert image[label != 0].mean() > image[label == 0].mean() + 0.1


def test_generation_rejects_bad_specs():
    with pytest.raises(ValueError):
        generate_synthetic_dataset((8, 8, 8), 1, 4, seed=0)
    with pytest.raises(ValueError):
        generate_synthetic_dataset((4, 4, 4), 2, 4, seed=0)
    with pytest.raises(ValueError):
        generate_synthetic_dataset((8, 8, 8), 2, 1, seed=0)


def test_augmentation_preserves_shape_and_labels():
    dataset = generate_synthetic_dataset((12, 12, 12), 3, 4, seed=6)
    rng = np.random.default_rng(0)
    image, label = augment_volume(dataset.images[0, 0], dataset.labels[0], rng)
    assert image.shape == (12, 12, 12)
    assert label.shape == (12, 12, 12)
    assert set(np.unique(label)) <= {0, 1, 2}


def test_augmentation_is_stochastic_with_identity_share():
    dataset = generate_synthetic_dataset((8, 8, 8), 2, 4, seed=7)
    rng = np.random.default_rng(1)
    changed = 0
    for _ in range(25):
        _, label = augment_volume(dataset.images[0, 0], dataset.labels[0], rng)
        changed += not np.array_equal(label, dataset.labels[0])
    # 80% transform probability: both outcomes should appear.
    assert 0 < changed < 25


def test_augmentation_deterministic_given_rng_state():
    dataset = generate_synthetic_dataset((8, 8, 8), 2, 4, seed=8)
    first = augment_volume(dataset.images[0, 0], dataset.labels[0],
                           np.random.default_rng(3))
    second = augment_volume(dataset.images[0, 0], dataset.labels[0],
                            np.random.default_rng(3))
    assert np.array_equal(first[0], second[0])
    assert np.array_equal(first[1], second[1])

"""Bounded integer hyperparameter spaces with continuous relaxation.

A search space is an ordered list of integer dimensions, each with half-open
bounds [lower, upper) whose effective value set is {lower, ..., upper - 1}.
Dimensions may be pinned to a single value, in which case they contribute no
coordinate to the relaxed real vector. A relaxed point is decoded to a
concrete configuration by taking the floor of every free coordinate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

#: Dimension names in canonical order, ahead of the variable-length ops list.
SCALAR_DIMENSIONS = ("n", "p", "sup", "res", "nodes")


class SpaceError(ValueError):
    """A space definition or a relaxed point violates its contract."""


@dataclass(frozen=True)
class HyperparameterSpec:
    """One integer dimension with half-open bounds [lower, upper).

    When ``fixed_value`` is set the dimension always takes that value and is
    excluded from the relaxed vector.
    """

    name: str
    lower: int
    upper: int
    fixed_value: int | None = None

    def __post_init__(self):
        if self.fixed_value is None:
            if self.lower >= self.upper:
                raise SpaceError(
                    f"dimension {self.name!r}: lower {self.lower} must be "
                    f"below upper {self.upper}"
                )
        elif not self.lower <= self.fixed_value < self.upper:
            raise SpaceError(
                f"dimension {self.name!r}: fixed value {self.fixed_value} "
                f"outside [{self.lower}, {self.upper})"
            )

    @property
    def is_fixed(self) -> bool:
        return self.fixed_value is not None

    @property
    def size(self) -> int:
        """Number of integers the dimension can take."""
        return 1 if self.is_fixed else self.upper - self.lower

    def values(self) -> range:
        if self.is_fixed:
            return range(self.fixed_value, self.fixed_value + 1)
        return range(self.lower, self.upper)


@dataclass(frozen=True)
class DecodedConfig:
    """Integer configuration obtained by flooring a relaxed point."""

    n: int
    p: int
    sup: int
    res: int
    nodes: int
    ops: tuple[int, ...]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "sup": self.sup,
            "res": self.res,
            "nodes": self.nodes,
            "ops": list(self.ops),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecodedConfig":
        return cls(
            n=int(data["n"]),
            p=int(data["p"]),
            sup=int(data["sup"]),
            res=int(data["res"]),
            nodes=int(data["nodes"]),
            ops=tuple(int(v) for v in data["ops"]),
        )


def canonical_key(config: DecodedConfig) -> str:
    """Deterministic, injective text key over all decoded fields.

    Two relaxed points with equal floors map to the same key; any field
    difference (including op codes masked out by a small node count) yields
    a distinct key.
    """
    ops = ",".join(str(v) for v in config.ops)
    return (
        f"n={config.n};p={config.p};sup={config.sup};res={config.res};"
        f"nodes={config.nodes};ops={ops}"
    )


class SearchSpace:
    """Ordered collection of dimensions: n, p, sup, res, nodes, ops0..opsK.

    The ops list length is determined by the largest representable block:
    max_nodes * (max_nodes - 1) / 2 entries, where max_nodes is the top of
    the effective node set.
    """

    def __init__(self, variant_name: str, specs: Sequence[HyperparameterSpec]):
        self.variant_name = variant_name
        self.specs = tuple(specs)
        self._validate()
        self.free_specs = tuple(s for s in self.specs if not s.is_fixed)
        self.n_h = len(self.free_specs)
        self.lower = np.array([s.lower for s in self.free_specs], dtype=float)
        self.upper = np.array([s.upper for s in self.free_specs], dtype=float)

    def _validate(self):
        names = [s.name for s in self.specs]
        head = tuple(names[: len(SCALAR_DIMENSIONS)])
        if head != SCALAR_DIMENSIONS:
            raise SpaceError(
                f"dimensions must start with {SCALAR_DIMENSIONS}, got {head}"
            )
        ops_names = names[len(SCALAR_DIMENSIONS):]
        expected = [f"ops{i}" for i in range(len(ops_names))]
        if ops_names != expected:
            raise SpaceError(f"ops dimensions must be named {expected}, got {ops_names}")
        nodes_spec = self.specs[4]
        max_nodes = nodes_spec.fixed_value if nodes_spec.is_fixed else nodes_spec.upper - 1
        required = max_nodes * (max_nodes - 1) // 2
        if len(ops_names) != required:
            raise SpaceError(
                f"{variant_msg(self.variant_name)}: node bound {max_nodes} requires "
                f"{required} ops dimensions, got {len(ops_names)}"
            )

    @property
    def ops_specs(self) -> tuple[HyperparameterSpec, ...]:
        return self.specs[len(SCALAR_DIMENSIONS):]

    def decode(self, point: Sequence[float]) -> DecodedConfig:
        """Floor every free coordinate and fill in fixed values.

        Raises SpaceError for a wrong-length, non-finite, or out-of-bounds
        point (the exclusive upper bound included).
        """
        coords = np.asarray(point, dtype=float)
        if coords.shape != (self.n_h,):
            raise SpaceError(
                f"point must have {self.n_h} coordinates, got shape {coords.shape}"
            )
        if not np.all(np.isfinite(coords)):
            raise SpaceError("point has non-finite coordinates")
        if np.any(coords < self.lower) or np.any(coords >= self.upper):
            raise SpaceError(f"point {coords.tolist()} outside the half-open box")
        values = {}
        free = iter(coords)
        for spec in self.specs:
            if spec.is_fixed:
                values[spec.name] = spec.fixed_value
            else:
                values[spec.name] = int(math.floor(next(free)))
        ops = tuple(values[s.name] for s in self.ops_specs)
        return DecodedConfig(
            n=values["n"], p=values["p"], sup=values["sup"], res=values["res"],
            nodes=values["nodes"], ops=ops,
        )

    def lift(self, config: DecodedConfig) -> tuple[float, ...]:
        """Map a decoded configuration back to a relaxed point (free dims only)."""
        full = [config.n, config.p, config.sup, config.res, config.nodes, *config.ops]
        return tuple(
            float(v) for v, spec in zip(full, self.specs) if not spec.is_fixed
        )

    def contains(self, point: Sequence[float]) -> bool:
        coords = np.asarray(point, dtype=float)
        if coords.shape != (self.n_h,):
            return False
        return bool(
            np.all(np.isfinite(coords))
            and np.all(coords >= self.lower)
            and np.all(coords < self.upper)
        )

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform samples from the half-open box, shape (count, n_h)."""
        return rng.uniform(self.lower, self.upper, size=(count, self.n_h))

    def cardinality(self) -> int:
        """Raw grid-point count: product of free dimension sizes, legality ignored."""
        total = 1
        for spec in self.specs:
            total *= spec.size
        return total

    def enumerate_configs(self) -> Iterator[DecodedConfig]:
        """All decoded configurations in lexicographic dimension order."""

        def recurse(index: int, chosen: list[int]):
            if index == len(self.specs):
                yield DecodedConfig(
                    n=chosen[0], p=chosen[1], sup=chosen[2], res=chosen[3],
                    nodes=chosen[4], ops=tuple(chosen[5:]),
                )
                return
            for value in self.specs[index].values():
                yield from recurse(index + 1, chosen + [value])

        yield from recurse(0, [])

    def describe(self) -> dict:
        return {
            "variant": self.variant_name,
            "dimensions": [
                {
                    "name": s.name,
                    "lower": s.lower,
                    "upper": s.upper,
                    "fixed": s.fixed_value,
                }
                for s in self.specs
            ],
        }


def variant_msg(name: str) -> str:
    return f"space {name!r}"


def _ops_specs(count: int, lower=0, upper=7, fixed: Sequence[int] | None = None):
    if fixed is not None:
        return [
            HyperparameterSpec(f"ops{i}", code, code + 1, fixed_value=code)
            for i, code in enumerate(fixed)
        ]
    return [HyperparameterSpec(f"ops{i}", lower, upper) for i in range(count)]


def _segnas11() -> SearchSpace:
    specs = [
        HyperparameterSpec("n", 8, 33),
        HyperparameterSpec("p", 2, 6),
        HyperparameterSpec("sup", 0, 2),
        HyperparameterSpec("res", 0, 2),
        HyperparameterSpec("nodes", 2, 5),
        *_ops_specs(6),
    ]
    return SearchSpace("segnas11", specs)


def _segnas4() -> SearchSpace:
    specs = [
        HyperparameterSpec("n", 8, 33),
        HyperparameterSpec("p", 2, 6),
        HyperparameterSpec("sup", 0, 2),
        HyperparameterSpec("res", 0, 2),
        HyperparameterSpec("nodes", 3, 4, fixed_value=3),
        *_ops_specs(3, fixed=(2, 0, 2)),
    ]
    return SearchSpace("segnas4", specs)


def _segnas7() -> SearchSpace:
    specs = [
        HyperparameterSpec("n", 16, 17, fixed_value=16),
        HyperparameterSpec("p", 4, 5, fixed_value=4),
        HyperparameterSpec("sup", 0, 1, fixed_value=0),
        HyperparameterSpec("res", 1, 2, fixed_value=1),
        HyperparameterSpec("nodes", 2, 5),
        *_ops_specs(6),
    ]
    return SearchSpace("segnas7", specs)


_PRESETS = {"segnas11": _segnas11, "segnas4": _segnas4, "segnas7": _segnas7}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))


def space_preset(name: str) -> SearchSpace:
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise SpaceError(
            f"unknown space preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return factory()


def space_from_dict(data: dict) -> SearchSpace:
    try:
        variant = data["variant"]
        dims = data["dimensions"]
    except (KeyError, TypeError) as exc:
        raise SpaceError(f"space definition missing field: {exc}") from None
    specs = []
    for dim in dims:
        try:
            specs.append(
                HyperparameterSpec(
                    name=str(dim["name"]),
                    lower=int(dim["lower"]),
                    upper=int(dim["upper"]),
                    fixed_value=None if dim.get("fixed") is None else int(dim["fixed"]),
                )
            )
        except KeyError as exc:
            raise SpaceError(f"dimension missing field: {exc}") from None
    return SearchSpace(str(variant), specs)


def load_space_file(path: str) -> SearchSpace:
    with open(path, "r", encoding="utf-8") as handle:
        return space_from_dict(json.load(handle))

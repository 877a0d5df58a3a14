"""Synthetic seller populations and buyer targeting predicates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .agents import DEFAULT_C_MAX, SellerProfile, UtilitySpec
from .errors import ConfigError, DomainError, RequestError

FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class PointMass:
    value: float

    @property
    def upper(self) -> float:
        return self.value

    @property
    def lower(self) -> float:
        return self.value

    @property
    def mean(self) -> float:
        return self.value

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))


@dataclass(frozen=True)
class UniformCost:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ConfigError(f"uniform cost needs finite lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def upper(self) -> float:
        return self.hi

    @property
    def lower(self) -> float:
        return self.lo

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size)


@dataclass(frozen=True)
class DiscreteCost:
    """Finite-support cost distribution given by values and their weights."""

    values: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.values) == 0 or len(self.values) != len(self.weights):
            raise ConfigError("discrete cost needs matching, nonempty values and weights")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ConfigError("discrete cost weights must be non-negative with positive total")

    @property
    def upper(self) -> float:
        return max(self.values)

    @property
    def lower(self) -> float:
        return min(self.values)

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.weights) / sum(self.weights))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        p = np.asarray(self.weights, dtype=float)
        return rng.choice(np.asarray(self.values, dtype=float), size=size, p=p / p.sum())


@dataclass(frozen=True)
class CohortSpec:
    """One homogeneous slice of the seller population.

    ``attribute_kind`` is ``"bernoulli"`` or ``"gaussian"``; ``attribute_sigma``
    is only read for the latter. Differing attribute means across cohorts are
    what correlate a seller's data with their privacy cost.
    """

    name: str
    fraction: float
    cost: PointMass | UniformCost | DiscreteCost
    utility: UtilitySpec = field(default_factory=UtilitySpec)
    attribute_mean: float = 0.5
    attribute_kind: str = "bernoulli"
    attribute_sigma: float = 1.0
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigError(f"cohort {self.name!r}: fraction must lie in [0, 1]")
        if self.cost.lower < 0:
            raise ConfigError(f"cohort {self.name!r}: costs must be non-negative")
        if self.attribute_kind not in ("bernoulli", "gaussian"):
            raise ConfigError(f"cohort {self.name!r}: unknown attribute kind {self.attribute_kind!r}")
        if self.attribute_kind == "bernoulli" and not 0.0 <= self.attribute_mean <= 1.0:
            raise ConfigError(f"cohort {self.name!r}: bernoulli mean must lie in [0, 1]")
        if self.attribute_kind == "gaussian" and self.attribute_sigma < 0:
            raise ConfigError(f"cohort {self.name!r}: sigma must be non-negative")
        if "cohort" in self.tags:
            raise ConfigError("the 'cohort' tag is reserved")


@dataclass(frozen=True)
class Seller:
    id: int
    profile: SellerProfile
    attribute: float
    tags: Mapping[str, str] = field(default_factory=dict)

    @property
    def cohort(self) -> str:
        return self.tags.get("cohort", "")


@dataclass(frozen=True)
class Population:
    sellers: tuple
    seed: int

    def __len__(self):
        return len(self.sellers)

    def __iter__(self):
        return iter(self.sellers)

    @cached_property
    def tag_keys(self) -> frozenset:
        return frozenset(k for s in self.sellers for k in s.tags)

    def to_csv(self, path) -> Path:
        """Write one row per seller: id, cohort, cost, utility_a, attribute."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "cohort", "cost", "utility_a", "attribute"])
            for s in self.sellers:
                writer.writerow(
                    [s.id, s.cohort, repr(s.profile.cost), repr(s.profile.utility.coefficient), repr(s.attribute)]
                )
        return path


def cohort_sizes(fractions: Sequence[float], n: int) -> list[int]:
    """round(fraction * n) per cohort; the largest cohort absorbs the residual."""
    sizes = [int(round(f * n)) for f in fractions]
    largest = max(range(len(fractions)), key=lambda i: fractions[i])
    sizes[largest] += n - sum(sizes)
    if sizes[largest] < 0:
        raise ConfigError("cohort fractions cannot be realized at this population size")
    return sizes


def generate_population(
    cohorts: Sequence[CohortSpec], n: int, seed: int, c_max: float = DEFAULT_C_MAX
) -> Population:
    if not cohorts:
        raise ConfigError("at least one cohort is required")
    if n < 1:
        raise ConfigError(f"population size must be >= 1, got {n}")
    total = math.fsum(c.fraction for c in cohorts)
    if abs(total - 1.0) > FRACTION_TOL:
        raise ConfigError(f"cohort fractions sum to {total}, not 1")
    names = [c.name for c in cohorts]
    if len(set(names)) != len(names):
        raise ConfigError("cohort names must be unique")
    for c in cohorts:
        if c.cost.upper > c_max:
            raise ConfigError(f"cohort {c.name!r}: cost support exceeds c_max={c_max}")

    sizes = cohort_sizes([c.fraction for c in cohorts], n)
    streams = np.random.SeedSequence(seed).spawn(len(cohorts))
    sellers = []
    for spec, size, stream in zip(cohorts, sizes, streams):
        rng = np.random.default_rng(stream)
        costs = spec.cost.draw(rng, size)
        if spec.attribute_kind == "bernoulli":
            attrs = (rng.random(size) < spec.attribute_mean).astype(float)
        else:
            attrs = rng.normal(spec.attribute_mean, spec.attribute_sigma, size)
        tags = {"cohort": spec.name, **spec.tags}
        for cost, attr in zip(costs, attrs):
            profile = SellerProfile(float(cost), spec.utility, c_max)
            sellers.append(Seller(len(sellers), profile, float(attr), tags))
    return Population(tuple(sellers), seed)


@dataclass(frozen=True)
class Predicate:
    """Conjunction of exact tag matches and an optional attribute range.

    ``tags`` accepts a mapping or (key, value) pairs; a key may repeat, in
    which case every listed value must match.
    """

    tags: tuple = ()
    attribute_min: float | None = None
    attribute_max: float | None = None

    def __post_init__(self):
        pairs = self.tags.items() if isinstance(self.tags, Mapping) else self.tags
        object.__setattr__(self, "tags", tuple((str(k), str(v)) for k, v in pairs))

    def __and__(self, other: "Predicate") -> "Predicate":
        lo = [v for v in (self.attribute_min, other.attribute_min) if v is not None]
        hi = [v for v in (self.attribute_max, other.attribute_max) if v is not None]
        return Predicate(self.tags + other.tags, max(lo) if lo else None, min(hi) if hi else None)

    @property
    def keys(self) -> set:
        return {k for k, _ in self.tags}

    def matches(self, seller: Seller) -> bool:
        if self.attribute_min is not None and seller.attribute < self.attribute_min:
            return False
        if self.attribute_max is not None and seller.attribute > self.attribute_max:
            return False
        return all(seller.tags.get(k) == v for k, v in self.tags)


def qualifying_subset(pop: Population, predicate: Predicate | Mapping[str, str] | None = None) -> list[Seller]:
    """Sellers satisfying every constraint in ``predicate``, in id order."""
    if predicate is None:
        predicate = Predicate()
    elif not isinstance(predicate, Predicate):
        predicate = Predicate(predicate)
    unknown = predicate.keys - pop.tag_keys
    if unknown:
        raise RequestError(f"predicate references unknown tags: {sorted(unknown)}")
    chosen = [s for s in pop.sellers if predicate.matches(s)]
    return sorted(chosen, key=lambda s: s.id)


def population_mean(subset: Sequence[Seller]) -> float:
    if len(subset) == 0:
        raise DomainError("mean of an empty subset is undefined")
    return math.fsum(s.attribute for s in subset) / len(subset)


def seller_arrays(subset: Sequence[Seller]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """ids, costs, risk coefficients and attributes as aligned float arrays."""
    ids = np.fromiter((s.id for s in subset), dtype=np.int64, count=len(subset))
    costs = np.fromiter((s.profile.cost for s in subset), dtype=np.float64, count=len(subset))
    coefs = np.fromiter((s.profile.utility.coefficient for s in subset), dtype=np.float64, count=len(subset))
    attrs = np.fromiter((s.attribute for s in subset), dtype=np.float64, count=len(subset))
    return ids, costs, coefs, attrs

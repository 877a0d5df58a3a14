"""Scenario configuration: YAML/JSON loading, validation and seed splitting."""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from ..agents import DEFAULT_C_MAX, UtilitySpec
from ..elicitation import DEFAULT_EPSILON, QuestionGrid
from ..errors import ConfigError, MarketError
from ..menu import DEFAULT_Y_POINTS
from ..population import FRACTION_TOL, CohortSpec, DiscreteCost, PointMass, Predicate, UniformCost

DEFAULT_SEED = 20120501

FIGURE1_KS = (1, 2, 5) + tuple(range(10, 1001, 10))


def component_seed(master: int, name: str) -> int:
    """Independent 64-bit seed for one named component of an experiment.

    Derived from (master, name) alone, so adding components never shifts
    the random streams of existing ones.
    """
    key = zlib.crc32(name.encode("utf-8"))
    ss = np.random.SeedSequence(int(master), spawn_key=(key,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def reference_cohorts() -> tuple:
    """Half high-cost (c=10), half low-cost (c=0), all with u(w) = 1 - exp(-w).

    Attribute means 0.8 / 0.2 are demonstration values that correlate the
    data with privacy cost.
    """
    u = UtilitySpec("cara", 1.0)
    return (
        CohortSpec("high", 0.5, PointMass(10.0), u, attribute_mean=0.8),
        CohortSpec("low", 0.5, PointMass(0.0), u, attribute_mean=0.2),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    cohorts: tuple = field(default_factory=reference_cohorts)
    n: int = 1000
    c_max: float = DEFAULT_C_MAX
    grid: QuestionGrid = field(
        default_factory=lambda: QuestionGrid(
            (0.01, 0.05, 0.1, 0.2, 0.5, 1.0),
            (1.0, 5.0, 10.0, 20.0),
            (0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0),
        )
    )
    epsilon: float = DEFAULT_EPSILON
    ks: tuple = FIGURE1_KS
    y_points: int = DEFAULT_Y_POINTS
    menu_mode: str = "model"
    commission: float = 0.0
    bundling_q: float = 0.2
    bundling_rs: tuple = (1, 2, 4, 10, 100)
    sample_k: int = 200
    runs: int = 20000
    seed: int = DEFAULT_SEED
    predicate: Predicate = field(default_factory=Predicate)

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not self.cohorts:
            raise ConfigError("at least one cohort is required")
        total = math.fsum(c.fraction for c in self.cohorts)
        if abs(total - 1.0) > FRACTION_TOL:
            raise ConfigError(f"cohort fractions sum to {total}, not 1")
        if any(c.cost.upper > self.c_max for c in self.cohorts):
            raise ConfigError(f"a cohort's cost support exceeds c_max={self.c_max}")
        if self.n < 1:
            raise ConfigError("population size must be >= 1")
        if self.menu_mode not in ("log", "model"):
            raise ConfigError(f"menu_mode must be 'log' or 'model', got {self.menu_mode!r}")
        if self.y_points < 1:
            raise ConfigError("y_points must be >= 1")
        if self.commission < 0:
            raise ConfigError("commission must be non-negative")
        if not 0.0 < self.bundling_q <= 1.0:
            raise ConfigError("bundling q must lie in (0, 1]")
        if not self.bundling_rs or any(int(r) != r or r < 1 for r in self.bundling_rs):
            raise ConfigError("bundling r list must hold positive integers")
        if not self.ks or any(int(k) != k or not 1 <= k <= self.n for k in self.ks):
            raise ConfigError(f"every k must be an integer in [1, {self.n}]")
        if not 1 <= self.sample_k <= self.n:
            raise ConfigError(f"sample_k must lie in [1, {self.n}]")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in [0, 1)")

    def seed_for(self, name: str) -> int:
        return component_seed(self.seed, name)

    def with_overrides(self, seed: int | None = None, runs: int | None = None) -> "ScenarioConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if runs is not None:
            changes["runs"] = int(runs)
        return replace(self, **changes) if changes else self


def _cost(raw: Mapping) -> Any:
    kind = raw.get("kind", "point")
    if kind == "point":
        return PointMass(float(raw["value"]))
    if kind == "uniform":
        return UniformCost(float(raw["lo"]), float(raw["hi"]))
    if kind == "discrete":
        return DiscreteCost(tuple(map(float, raw["values"])), tuple(map(float, raw["weights"])))
    raise ConfigError(f"unknown cost kind {kind!r}")


def _cohort(raw: Mapping) -> CohortSpec:
    util = raw.get("utility", {})
    family = util.get("family", "cara")
    a = float(util.get("a", 0.0 if family == "linear" else 1.0))
    attr = raw.get("attribute", {})
    return CohortSpec(
        name=str(raw["name"]),
        fraction=float(raw["fraction"]),
        cost=_cost(raw["cost"]),
        utility=UtilitySpec(family, a),
        attribute_mean=float(attr.get("mean", 0.5)),
        attribute_kind=str(attr.get("kind", "bernoulli")),
        attribute_sigma=float(attr.get("sigma", 1.0)),
        tags={str(k): str(v) for k, v in raw.get("tags", {}).items()},
    )


def config_from_dict(raw: Mapping) -> ScenarioConfig:
    """Build a config from a parsed mapping; absent keys keep the reference scenario defaults."""
    if not isinstance(raw, Mapping):
        raise ConfigError("scenario file must hold a mapping at top level")
    known = {"population", "grid", "epsilon", "ks", "y_points", "menu_mode", "commission",
             "bundling", "sample_k", "runs", "seed", "predicate"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    kw: dict = {}
    try:
        pop = raw.get("population", {})
        if "cohorts" in pop:
            kw["cohorts"] = tuple(_cohort(c) for c in pop["cohorts"])
        if "n" in pop:
            kw["n"] = int(pop["n"])
        if "c_max" in pop:
            kw["c_max"] = float(pop["c_max"])
        if "grid" in raw:
            g = raw["grid"]
            kw["grid"] = QuestionGrid(tuple(g["qs"]), tuple(g["xs"]), tuple(g["ys"]))
        for key, cast in (("epsilon", float), ("y_points", int), ("menu_mode", str),
                          ("commission", float), ("sample_k", int), ("runs", int), ("seed", int)):
            if key in raw:
                kw[key] = cast(raw[key])
        if "ks" in raw:
            kw["ks"] = tuple(int(k) for k in raw["ks"])
        if "bundling" in raw:
            b = raw["bundling"]
            if "q" in b:
                kw["bundling_q"] = float(b["q"])
            if "rs" in b:
                kw["bundling_rs"] = tuple(int(r) for r in b["rs"])
        if "predicate" in raw:
            p = raw["predicate"]
            kw["predicate"] = Predicate(
                p.get("tags", {}), p.get("attribute_min"), p.get("attribute_max")
            )
        return ScenarioConfig(**kw)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, MarketError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    """Read a YAML (or JSON) scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse scenario file {path}: {exc}") from exc
    return config_from_dict(raw or {})

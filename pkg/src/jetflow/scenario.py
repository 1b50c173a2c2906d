"""Scenario files: JSON descriptions of a verification or solver run.

A scenario fixes the jet-space dimensions, a temporal and a spatial metric,
the randomized chart-change catalog and jet sample, and per-command
sections.  Loading validates against a JSON schema (errors carry the JSON
path of the offending element) and the JETFLOW_SEED environment variable
overrides the scenario seed so a run can be reproduced or re-randomized
without editing the file.
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass, field

import numpy as np
from jsonschema import Draft202012Validator

from .geometry import Metric, metric_from_name
from .numdiff import ChangeMap, change_catalog
from .jetspace import JetPoint, random_jet

__all__ = ["ScenarioError", "Scenario", "SCENARIO_SCHEMA", "load_scenario",
           "DEFAULT_SEED", "SUITE_NAMES"]

DEFAULT_SEED = 2026
SUITE_NAMES = ("dtensors", "sprays", "connection", "adapted", "prolong")

_CHANGE_KINDS = ["affine", "shear", "monotone", "mixed"]

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["dimensions", "metrics"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "dimensions": {
            "type": "object",
            "required": ["p", "n"],
            "additionalProperties": False,
            "properties": {
                "p": {"type": "integer", "minimum": 1, "maximum": 6},
                "n": {"type": "integer", "minimum": 1, "maximum": 6},
            },
        },
        "metrics": {
            "type": "object",
            "required": ["temporal", "spatial"],
            "additionalProperties": False,
            "properties": {
                "temporal": {"type": "string"},
                "spatial": {"type": "string"},
            },
        },
        "changes": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kinds": {
                    "type": "array",
                    "items": {"enum": _CHANGE_KINDS},
                    "minItems": 1,
                },
                "count": {"type": "integer", "minimum": 1, "maximum": 100},
            },
        },
        "jets": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 1, "maximum": 10000},
                "v_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "suites": {
                    "type": "array",
                    "items": {"enum": list(SUITE_NAMES) + ["all"]},
                    "minItems": 1,
                },
                "dtensor_candidates": {
                    "type": "array",
                    "items": {"type": "string"},
                    "minItems": 1,
                },
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "geodesic": {
            "type": "object",
            "required": ["x0", "v0", "t_span", "steps"],
            "additionalProperties": False,
            "properties": {
                "x0": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "v0": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "t_span": {"type": "array", "items": {"type": "number"},
                           "minItems": 2, "maxItems": 2},
                "steps": {"type": "integer", "minimum": 1, "maximum": 10000000},
            },
        },
        "harmonic": {
            "type": "object",
            "required": ["boundary"],
            "additionalProperties": False,
            "properties": {
                "boundary": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "grid": {"type": "integer", "minimum": 3, "maximum": 513},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "damping": {"type": "number", "exclusiveMinimum": 0},
                "domain": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"},
                              "minItems": 2, "maxItems": 2},
                    "minItems": 2, "maxItems": 2,
                },
            },
        },
        "prolong": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fields": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["name", "temporal", "spatial"],
                        "additionalProperties": False,
                        "properties": {
                            "name": {"type": "string"},
                            "temporal": {"type": "array", "items": {"type": "string"}},
                            "spatial": {"type": "array", "items": {"type": "string"}},
                        },
                    },
                },
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "substeps": {"type": "integer", "minimum": 1, "maximum": 1000},
            },
        },
    },
}


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    raw: dict
    seed: int
    p: int
    n: int
    temporal_metric: Metric
    spatial_metric: Metric
    change_kinds: list[str] = field(default_factory=lambda: ["affine", "shear", "mixed"])
    change_count: int = 3
    jet_count: int = 20
    v_scale: float = 2.0

    def suite_rng(self, suite: str) -> np.random.Generator:
        """Independent deterministic stream per suite: adding or reordering
        suites does not perturb the draws of the others."""
        tag = zlib.crc32(suite.encode("utf-8"))
        return np.random.default_rng(np.random.SeedSequence([self.seed, tag]))

    def changes_for(self, suite: str) -> list[ChangeMap]:
        kinds = [k for k in self.change_kinds if k != "monotone" or self.p == self.n == 1]
        return change_catalog(self.suite_rng(suite + "/changes"), self.p, self.n,
                              kinds, self.change_count)

    def jets_for(self, suite: str, count: int | None = None) -> list[JetPoint]:
        rng = self.suite_rng(suite + "/jets")
        return [random_jet(rng, self.p, self.n,
                           box_t=self.temporal_metric.box,
                           box_x=self.spatial_metric.box,
                           v_scale=self.v_scale)
                for _ in range(count if count is not None else self.jet_count)]

    def section(self, name: str) -> dict:
        if name not in self.raw:
            raise ScenarioError(f"scenario has no '{name}' section")
        return self.raw[name]


def _json_path(error) -> str:
    return "/" + "/".join(str(part) for part in error.absolute_path)


def load_scenario(path: str) -> Scenario:
    """Read, schema-validate, and resolve a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc

    validator = Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ScenarioError(f"scenario error at '{_json_path(first)}': {first.message}")

    p = raw["dimensions"]["p"]
    n = raw["dimensions"]["n"]
    env_seed = os.environ.get("JETFLOW_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ScenarioError(f"JETFLOW_SEED must be an integer, got {env_seed!r}") from exc
        if seed < 0:
            raise ScenarioError("JETFLOW_SEED must be non-negative")
    else:
        seed = raw.get("seed", DEFAULT_SEED)

    try:
        h = metric_from_name(raw["metrics"]["temporal"], kind="temporal")
        phi = metric_from_name(raw["metrics"]["spatial"], kind="spatial")
    except ValueError as exc:
        raise ScenarioError(f"scenario error at '/metrics': {exc}") from exc
    if h.dim != p:
        raise ScenarioError(f"temporal metric '{h.name}' has dimension {h.dim}, scenario says p={p}")
    if phi.dim != n:
        raise ScenarioError(f"spatial metric '{phi.name}' has dimension {phi.dim}, scenario says n={n}")

    sc = Scenario(raw=raw, seed=seed, p=p, n=n, temporal_metric=h, spatial_metric=phi)
    changes = raw.get("changes", {})
    if "kinds" in changes:
        sc.change_kinds = list(changes["kinds"])
    if "count" in changes:
        sc.change_count = changes["count"]
    jets = raw.get("jets", {})
    if "count" in jets:
        sc.jet_count = jets["count"]
    if "v_scale" in jets:
        sc.v_scale = jets["v_scale"]
    return sc

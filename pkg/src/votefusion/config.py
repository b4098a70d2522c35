"""Experiment configuration: JSON schema, parsing, and validation.

A config is a single JSON document with a ``schema_version`` field; the
loader reports the offending line for syntax errors and the offending field
path for semantic ones, and the CLI maps both to exit code 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_ordering, check_positive, check_probability
from .core import CostModel, ExponentialModel, FusionRule, GaussianModel, Prior
from .partial import ObservationGraph
from .scenarios import Scenario, VOTING_MODES

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the bad entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment request built from one config document."""

    scenario: Scenario
    ordering_search: bool = False
    sweep_weights: tuple[float, ...] | None = None
    mc_trials: int | None = None
    mc_seed: int = 0
    out_dir: str | None = None
    out_format: str = "csv"


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError("missing required field", f"{path}.{key}" if path else key)
    return mapping[key]


def _parse_model(entry, path: str):
    if not isinstance(entry, dict):
        raise ConfigError("agent entry must be an object", path)
    kind = _require(entry, "model", path)
    try:
        if kind == "gaussian":
            return GaussianModel(check_positive(entry.get("variance", 1.0), "variance"))
        if kind == "exponential":
            return ExponentialModel(
                check_positive(entry.get("rate0", 2.0), "rate0"),
                check_positive(entry.get("rate1", 1.0), "rate1"),
            )
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown model kind {kind!r}", f"{path}.model")


def _parse_weights(spec, path: str) -> tuple[float, ...]:
    if isinstance(spec, list):
        weights = tuple(float(w) for w in spec)
    elif isinstance(spec, dict):
        count = int(spec.get("count", 41))
        lo = float(spec.get("min", 1e-3))
        hi = float(spec.get("max", 1e3))
        if count < 1 or lo <= 0 or hi < lo:
            raise ConfigError("need count >= 1 and 0 < min <= max", path)
        weights = tuple(float(w) for w in np.geomspace(lo, hi, count))
    else:
        raise ConfigError("sweep must be a weight list or {count, min, max}", path)
    if not weights or any(not (w > 0 and math.isfinite(w)) for w in weights):
        raise ConfigError("sweep weights must be positive finite reals", path)
    return weights


def parse_config(document: dict) -> ExperimentConfig:
    """Validate a parsed JSON document into an ExperimentConfig."""
    if not isinstance(document, dict):
        raise ConfigError("config root must be a JSON object")
    version = _require(document, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
            "schema_version",
        )

    try:
        prior = Prior(check_probability(_require(document, "prior", "")["p0"], "prior.p0"))
    except (KeyError, TypeError):
        raise ConfigError("must be an object with a p0 field", "prior") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "prior.p0") from None

    costs_doc = document.get("costs", {})
    try:
        costs = CostModel(
            check_positive(costs_doc.get("false_alarm", 1.0), "costs.false_alarm"),
            check_positive(costs_doc.get("missed_detection", 1.0), "costs.missed_detection"),
        )
    except (AttributeError, TypeError):
        raise ConfigError("must be an object", "costs") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "costs") from None

    agents_doc = _require(document, "agents", "")
    if not isinstance(agents_doc, list) or not agents_doc:
        raise ConfigError("must be a nonempty list", "agents")
    models = tuple(_parse_model(a, f"agents[{i}]") for i, a in enumerate(agents_doc))

    fusion_doc = _require(document, "fusion", "")
    try:
        rule = FusionRule(int(fusion_doc["votes_needed"]), int(fusion_doc["team_size"]))
    except (KeyError, TypeError):
        raise ConfigError("must be an object with votes_needed and team_size", "fusion") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "fusion") from None
    if rule.team_size != len(models):
        raise ConfigError(
            f"team_size {rule.team_size} does not match the {len(models)} agents",
            "fusion.team_size",
        )

    mode = document.get("mode", "secret")
    if mode not in VOTING_MODES:
        raise ConfigError(f"must be one of {VOTING_MODES}", "mode")

    graph = None
    if "observation_graph" in document:
        try:
            graph = ObservationGraph(
                tuple(tuple(int(m) for m in row) for row in document["observation_graph"])
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "observation_graph") from None
    if mode == "partial" and graph is None:
        raise ConfigError("partial mode requires observation_graph", "observation_graph")

    ordering = None
    ordering_search = False
    if "ordering" in document and document["ordering"] is not None:
        if document["ordering"] == "search":
            ordering_search = True
        else:
            try:
                ordering = check_ordering(document["ordering"], len(models))
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc), "ordering") from None

    sweep_weights = None
    if "sweep" in document and document["sweep"] is not None:
        sweep_weights = _parse_weights(document["sweep"], "sweep")

    mc_trials = None
    mc_seed = 0
    if "mc" in document and document["mc"] is not None:
        mc_doc = document["mc"]
        if not isinstance(mc_doc, dict):
            raise ConfigError("must be an object", "mc")
        try:
            mc_trials = int(mc_doc.get("trials", 100_000))
            mc_seed = int(mc_doc.get("seed", 0))
        except (TypeError, ValueError):
            raise ConfigError("trials and seed must be integers", "mc") from None
        if mc_trials < 1:
            raise ConfigError("trials must be >= 1", "mc.trials")
        if not 0 <= mc_seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer", "mc.seed")

    out_doc = document.get("output", {})
    if not isinstance(out_doc, dict):
        raise ConfigError("must be an object", "output")
    out_format = out_doc.get("format", "csv")
    if out_format not in ("csv", "json"):
        raise ConfigError("format must be csv or json", "output.format")

    try:
        scenario = Scenario(prior, costs, models, rule, mode, graph, ordering)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    return ExperimentConfig(
        scenario=scenario,
        ordering_search=ordering_search,
        sweep_weights=sweep_weights,
        mc_trials=mc_trials,
        mc_seed=mc_seed,
        out_dir=out_doc.get("dir"),
        out_format=out_format,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return parse_config(document)

"""Scenario configuration files.

One JSON file fully determines a run:

{
  "kind": "otb",                      // or unprotected | gaussian | laplacian
                                      //    | spread | implode
  "population": {
    "identities": 2,
    "captures_per_identity": 8,
    "jitter": 0.16,
    "seed": 1
  },
  "transform": {"kind": "gaussian", "seed": 5, "strength": 30.0},
                                      // baselines only; kind must match
  "alpha": 0.5,                       // otb morph weight
  "face_source_seed": 7,              // otb random-face stream
  "embedder": "toy",                  // or "remote:http://host:port"
  "threshold_policy": "eer",          // or "far=0.1" | "far=0.01" | "far=0.001"
  "attack": {
    "budget": 180, "queries_per_session": 1,
    "step": 50.0, "patch": 16, "seed": 9
  }
}

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json

from .attacksim import AttackConfig, PopulationSpec, ScenarioConfigError, ScenarioSpec
from .transforms import TransformSpec


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"kind", "population", "transform", "alpha", "face_source_seed",
             "face_source_dir", "embedder", "threshold_policy", "attack"}
_POP_KEYS = {"identities", "captures_per_identity", "jitter", "seed",
             "directory"}
_ATTACK_KEYS = {"budget", "queries_per_session", "step", "patch", "seed"}
_TRANSFORM_KEYS = {"kind", "seed", "strength"}


def _check_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_scenario(obj: dict) -> tuple[ScenarioSpec, AttackConfig]:
    if not isinstance(obj, dict):
        raise ConfigError("scenario config must be a JSON object")
    _check_keys(obj, _TOP_KEYS, "scenario")
    if "kind" not in obj:
        raise ConfigError("scenario config needs a \"kind\"")

    pop_obj = obj.get("population", {})
    _check_keys(pop_obj, _POP_KEYS, "population")
    population = PopulationSpec(
        identities=int(pop_obj.get("identities", 2)),
        captures_per_identity=int(pop_obj.get("captures_per_identity", 8)),
        jitter=float(pop_obj.get("jitter", 0.16)),
        seed=int(pop_obj.get("seed", 1)),
        directory=pop_obj.get("directory"),
    )

    transform = None
    if obj.get("transform") is not None:
        t_obj = obj["transform"]
        _check_keys(t_obj, _TRANSFORM_KEYS, "transform")
        try:
            transform = TransformSpec.from_json(t_obj)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad transform spec: {exc}") from exc

    attack_obj = obj.get("attack", {})
    _check_keys(attack_obj, _ATTACK_KEYS, "attack")
    attack = AttackConfig(
        budget=int(attack_obj.get("budget", 180)),
        queries_per_session=int(attack_obj.get("queries_per_session", 1)),
        step=float(attack_obj.get("step", 50.0)),
        patch=int(attack_obj.get("patch", 16)),
        seed=int(attack_obj.get("seed", 0)),
    )

    spec = ScenarioSpec(
        kind=obj["kind"],
        population=population,
        transform=transform,
        alpha=float(obj.get("alpha", 0.5)),
        face_source_seed=int(obj.get("face_source_seed", 7)),
        face_source_dir=obj.get("face_source_dir"),
        embedder=str(obj.get("embedder", "toy")),
        threshold_policy=str(obj.get("threshold_policy", "eer")),
    )
    try:
        spec.validate()
        attack.validate()
    except ScenarioConfigError as exc:
        raise ConfigError(str(exc)) from exc
    return spec, attack


def scenario_to_json(spec: ScenarioSpec, attack: AttackConfig) -> dict:
    obj = {
        "kind": spec.kind,
        "population": {
            "identities": spec.population.identities,
            "captures_per_identity": spec.population.captures_per_identity,
            "jitter": spec.population.jitter,
            "seed": spec.population.seed,
        },
        "alpha": spec.alpha,
        "face_source_seed": spec.face_source_seed,
        "embedder": spec.embedder,
        "threshold_policy": spec.threshold_policy,
        "attack": {
            "budget": attack.budget,
            "queries_per_session": attack.queries_per_session,
            "step": attack.step,
            "patch": attack.patch,
            "seed": attack.seed,
        },
    }
    if spec.population.directory is not None:
        obj["population"]["directory"] = spec.population.directory
    if spec.face_source_dir is not None:
        obj["face_source_dir"] = spec.face_source_dir
    if spec.transform is not None:
        obj["transform"] = spec.transform.to_json()
    return obj


def load_scenario(path) -> tuple[ScenarioSpec, AttackConfig]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_scenario(obj)

"""Run configuration: a JSON document that makes every run reproducible."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .featurize import (
    BASELINE_GROUPS,
    DEFAULT_AMBIENT_TEMP,
    DEFAULT_MIN_ABSORPTIVITY,
    FeatureGroup,
    FeatureSpec,
    Target,
)
from .learners import MODEL_KINDS


@dataclass(frozen=True)
class Featurization:
    name: str
    spec: FeatureSpec


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    hyperparams: dict


@dataclass(frozen=True)
class RunConfig:
    data: Path
    target: Target
    featurizations: tuple[Featurization, ...]
    models: tuple[ModelConfig, ...]
    k: int = 5
    runs: int = 5
    seed: int = 0
    ambient_temp: float = DEFAULT_AMBIENT_TEMP
    min_absorptivity: float = DEFAULT_MIN_ABSORPTIVITY
    budget: int = 50  # tune subcommand only
    learning_curve_fractions: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "data": str(self.data),
            "target": self.target.value,
            "featurizations": [
                {"name": f.name, "groups": [g.value for g in f.spec.groups]}
                for f in self.featurizations
            ],
            "models": [
                {"kind": m.kind, "hyperparams": m.hyperparams} for m in self.models
            ],
            "cv": {"k": self.k, "runs": self.runs},
            "seed": self.seed,
            "ambient_temp": self.ambient_temp,
            "min_absorptivity": self.min_absorptivity,
            "budget": self.budget,
        }


def _parse_groups(raw, where: str) -> tuple[FeatureGroup, ...]:
    if raw is None:
        return BASELINE_GROUPS
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}: 'groups' must be a nonempty list of group names")
    groups = []
    for token in raw:
        try:
            groups.append(FeatureGroup(token))
        except ValueError:
            valid = ", ".join(g.value for g in FeatureGroup)
            raise ConfigError(
                f"{where}: unknown feature group {token!r}; valid groups: {valid}"
            ) from None
    return tuple(groups)


def load_config(path: str | Path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, base_dir=path.parent, seed_override=seed_override)


def parse_config(raw: dict, base_dir: Path | None = None, seed_override: int | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "data" not in raw:
        raise ConfigError("config is missing required key 'data'")
    data = Path(raw["data"])
    if base_dir is not None and not data.is_absolute():
        data = base_dir / data
    if not data.exists():
        raise ConfigError(f"dataset file {data} does not exist")

    try:
        target = Target(raw.get("target", "depth"))
    except ValueError:
        raise ConfigError(
            f"unknown target {raw.get('target')!r}; valid targets: "
            f"{[t.value for t in Target]}"
        ) from None

    ambient = float(raw.get("ambient_temp", DEFAULT_AMBIENT_TEMP))
    eta_min = float(raw.get("min_absorptivity", DEFAULT_MIN_ABSORPTIVITY))

    feats_raw = raw.get("featurizations", [{"name": "baseline", "groups": None}])
    featurizations = []
    for i, fr in enumerate(feats_raw):
        where = f"featurizations[{i}]"
        if not isinstance(fr, dict) or "name" not in fr:
            raise ConfigError(f"{where}: each featurization needs a 'name'")
        spec = FeatureSpec(
            groups=_parse_groups(fr.get("groups"), where),
            target=target,
            ambient_temp=ambient,
            min_absorptivity=eta_min,
        )
        featurizations.append(Featurization(name=fr["name"], spec=spec))
    names = [f.name for f in featurizations]
    if len(set(names)) != len(names):
        raise ConfigError(f"featurization names must be unique, got {names}")

    models_raw = raw.get("models", [{"kind": "random_forest"}])
    models = []
    for i, mr in enumerate(models_raw):
        where = f"models[{i}]"
        if not isinstance(mr, dict) or "kind" not in mr:
            raise ConfigError(f"{where}: each model needs a 'kind'")
        if mr["kind"] not in MODEL_KINDS:
            raise ConfigError(
                f"{where}: unknown model kind {mr['kind']!r}; valid kinds: {list(MODEL_KINDS)}"
            )
        hp = mr.get("hyperparams", {})
        if not isinstance(hp, dict):
            raise ConfigError(f"{where}: 'hyperparams' must be an object")
        models.append(ModelConfig(kind=mr["kind"], hyperparams=hp))

    cv = raw.get("cv", {})
    k = int(cv.get("k", 5))
    runs = int(cv.get("runs", 5))
    if k < 2:
        raise ConfigError(f"cv.k must be >= 2, got {k}")
    if runs < 1:
        raise ConfigError(f"cv.runs must be >= 1, got {runs}")

    seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)
    fractions = tuple(float(f) for f in raw.get("learning_curve_fractions", []))
    return RunConfig(
        data=data,
        target=target,
        featurizations=tuple(featurizations),
        models=tuple(models),
        k=k,
        runs=runs,
        seed=seed,
        ambient_temp=ambient,
        min_absorptivity=eta_min,
        budget=int(raw.get("budget", 50)),
        learning_curve_fractions=fractions,
    )

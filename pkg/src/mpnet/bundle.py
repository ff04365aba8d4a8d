"""Deployable unit: a trained model plus its feature spec and normalization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import MeltpoolRecord, NormalizationStats
from .featurize import FeatureSpec, featurize_query
from .learners import TrainedModel

BUNDLE_FORMAT = "mpnet-bundle/1"


@dataclass(frozen=True)
class ModelBundle:
    name: str
    model: TrainedModel
    spec: FeatureSpec
    stats: NormalizationStats

    def featurize(self, record: MeltpoolRecord) -> np.ndarray:
        row = featurize_query(self.spec, self.model.columns, record)
        return self.stats.transform(row[None, :])

    def predict_record(self, record: MeltpoolRecord):
        x = self.featurize(record)
        if self.model.task == "classification":
            return self.model.predict_proba(x)[0]
        return float(self.model.predict(x)[0])

    def to_dict(self) -> dict:
        return {
            "format": BUNDLE_FORMAT,
            "name": self.name,
            "model": self.model.to_dict(),
            "spec": self.spec.to_dict(),
            "stats": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        if d.get("format") != BUNDLE_FORMAT:
            raise ValueError(f"unsupported bundle format {d.get('format')!r}")
        return cls(
            name=d["name"],
            model=TrainedModel.from_dict(d["model"]),
            spec=FeatureSpec.from_dict(d["spec"]),
            stats=NormalizationStats.from_dict(d["stats"]),
        )


def save_bundle(bundle: ModelBundle, path: str | Path):
    Path(path).write_text(json.dumps(bundle.to_dict(), sort_keys=True), encoding="utf-8")


def load_bundle(path: str | Path) -> ModelBundle:
    return ModelBundle.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

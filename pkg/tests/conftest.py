import numpy as np
import pytest

from mpnet.dataset import Dataset, MeltpoolRecord, Process
from mpnet.synth import make_classification_dataset, make_regression_dataset

SAMPLE_CSV = "src/mpnet/data/sample_meltpool.csv"


@pytest.fixture(scope="session")
def sample_path():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / SAMPLE_CSV
    assert path.exists(), "sample dataset missing; run scripts/make_sample_data.py"
    return path


@pytest.fixture(scope="session")
def reg_dataset():
    # fixed beam diameter: depth is then a learnable function of (P, V, material)
    return make_regression_dataset(
        400, seed=101, noise=0.01, beam_diameter_range=(80e-6, 80e-6)
    )


@pytest.fixture(scope="session")
def cls_dataset():
    return make_classification_dataset(400, seed=202, noise=0.015)


def toy_records(n=10, missing_hatch_every=None, missing_diameter=False):
    records = []
    for i in range(n):
        records.append(
            MeltpoolRecord(
                source_id=f"t{i}",
                process=list(Process)[i % 4],
                material_name="SS316L",
                power=100.0 + i,
                velocity=0.5 + 0.1 * i,
                beam_diameter=None if missing_diameter else 80e-6,
                hatch_spacing=None
                if (missing_hatch_every and i % missing_hatch_every == 0)
                else 100e-6,
                depth=(50 + i) * 1e-6,
                width=(100 + i) * 1e-6,
            )
        )
    return Dataset(records=tuple(records))

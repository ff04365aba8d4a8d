"""Dataset schema, CSV ingestion, z-score normalization, and split plans.

Records are stored in SI units; the on-disk CSV keeps geometry columns in
micrometers (see ``CSV_HEADER``) and they are converted on load.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import EnumerationError, RowError, SchemaError

MICRON = 1e-6

CSV_HEADER = [
    "source_id",
    "process",
    "material",
    "power_w",
    "velocity_m_s",
    "beam_diameter_um",
    "layer_thickness_um",
    "hatch_spacing_um",
    "depth_um",
    "width_um",
    "length_um",
    "defect_class",
]


class Process(str, Enum):
    LPBF = "LPBF"
    EPBF = "EPBF"
    LENS = "LENS"
    EBAM = "EBAM"


#: Alphabetical category order used by the process one-hot encoding.
PROCESS_ORDER = sorted(Process, key=lambda p: p.value)


class DefectClass(str, Enum):
    DESIRABLE = "desirable"
    KEYHOLE = "keyhole"
    LACK_OF_FUSION = "lack_of_fusion"
    BALLING = "balling"


#: Class-id order for classification targets and probability columns.
CLASS_ORDER = [
    DefectClass.DESIRABLE,
    DefectClass.KEYHOLE,
    DefectClass.LACK_OF_FUSION,
    DefectClass.BALLING,
]
CLASS_IDS = {c: i for i, c in enumerate(CLASS_ORDER)}
N_CLASSES = len(CLASS_ORDER)


@dataclass(frozen=True)
class MeltpoolRecord:
    """One experiment row: process, material, parameters, and labels (SI units)."""

    source_id: str
    process: Process
    material_name: str
    power: float
    velocity: float
    beam_diameter: float | None = None
    layer_thickness: float | None = None
    hatch_spacing: float | None = None
    depth: float | None = None
    width: float | None = None
    length: float | None = None
    defect_class: DefectClass | None = None

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"power must be > 0, got {self.power}")
        if not self.velocity > 0:
            raise ValueError(f"velocity must be > 0, got {self.velocity}")
        for label in ("depth", "width", "length"):
            v = getattr(self, label)
            if v is not None and not v > 0:
                raise ValueError(f"{label} must be > 0 when present, got {v}")

    def get(self, field: str):
        return getattr(self, field)


@dataclass(frozen=True)
class Dataset:
    """Ordered record list plus load provenance."""

    records: tuple[MeltpoolRecord, ...]
    source: str = "<memory>"

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


# Record fields that may legitimately be absent.
OPTIONAL_FIELDS = (
    "beam_diameter",
    "layer_thickness",
    "hatch_spacing",
    "depth",
    "width",
    "length",
    "defect_class",
)

_UM_FIELDS = {
    "beam_diameter_um": "beam_diameter",
    "layer_thickness_um": "layer_thickness",
    "hatch_spacing_um": "hatch_spacing",
    "depth_um": "depth",
    "width_um": "width",
    "length_um": "length",
}


def _parse_float(cell: str, column: str, line: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise RowError(line, f"non-numeric value {cell!r} in column {column!r}") from None


def load_dataset(path: str | Path) -> Dataset:
    """Load a meltpool CSV into a :class:`Dataset`.

    The header must match ``CSV_HEADER`` exactly. Empty cells mark missing
    optional values; micrometer geometry columns are converted to meters.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {CSV_HEADER}") from None
        if header != CSV_HEADER:
            missing = [c for c in CSV_HEADER if c not in header]
            extra = [c for c in header if c not in CSV_HEADER]
            raise SchemaError(
                f"{path}: bad header; missing columns {missing}, unexpected {extra}"
            )
        records = []
        for line, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise RowError(line, f"expected {len(CSV_HEADER)} cells, got {len(row)}")
            cells = dict(zip(CSV_HEADER, (c.strip() for c in row)))
            try:
                process = Process(cells["process"])
            except ValueError:
                raise EnumerationError(
                    line, f"unknown process {cells['process']!r}"
                ) from None
            defect = None
            if cells["defect_class"]:
                try:
                    defect = DefectClass(cells["defect_class"])
                except ValueError:
                    raise EnumerationError(
                        line, f"unknown defect class {cells['defect_class']!r}"
                    ) from None
            kwargs = {
                "source_id": cells["source_id"],
                "process": process,
                "material_name": cells["material"],
                "power": _parse_float(cells["power_w"], "power_w", line),
                "velocity": _parse_float(cells["velocity_m_s"], "velocity_m_s", line),
                "defect_class": defect,
            }
            for col, attr in _UM_FIELDS.items():
                kwargs[attr] = (
                    _parse_float(cells[col], col, line) * MICRON if cells[col] else None
                )
            try:
                records.append(MeltpoolRecord(**kwargs))
            except ValueError as exc:
                raise RowError(line, str(exc)) from None
    return Dataset(records=tuple(records), source=str(path))


def filter_complete(ds: Dataset, required: set[str]) -> Dataset:
    """Keep only records where every field in ``required`` is present.

    Idempotent and order-preserving; an empty result is valid.
    """
    unknown = set(required) - set(OPTIONAL_FIELDS) - {"power", "velocity", "process", "material_name", "source_id"}
    if unknown:
        raise KeyError(f"unknown feature names {sorted(unknown)}")
    kept = tuple(
        r for r in ds.records if all(r.get(f) is not None for f in required)
    )
    return Dataset(records=kept, source=ds.source)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-column mean and population standard deviation fit on training data."""

    column_names: tuple[str, ...]
    mean: np.ndarray
    sigma: np.ndarray
    # population (ddof=0) sigma; recorded so the convention is auditable
    sigma_convention: str = "population"

    def transform(self, rows: np.ndarray) -> np.ndarray:
        safe = np.where(self.sigma > 0, self.sigma, 1.0)
        out = (rows - self.mean) / safe
        # constant columns map to 0 instead of blowing up
        return np.where(self.sigma > 0, out, 0.0)

    def invert(self, rows: np.ndarray) -> np.ndarray:
        return rows * np.where(self.sigma > 0, self.sigma, 1.0) + self.mean

    def to_dict(self) -> dict:
        return {
            "column_names": list(self.column_names),
            "mean": self.mean.tolist(),
            "sigma": self.sigma.tolist(),
            "sigma_convention": self.sigma_convention,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(
            column_names=tuple(d["column_names"]),
            mean=np.asarray(d["mean"], dtype=float),
            sigma=np.asarray(d["sigma"], dtype=float),
            sigma_convention=d.get("sigma_convention", "population"),
        )


def zscore_fit(matrix) -> NormalizationStats:
    """Fit per-column mean/sigma on a feature matrix (training partition only)."""
    rows = np.asarray(matrix.rows, dtype=float)
    if rows.size == 0:
        raise ValueError("cannot fit normalization on an empty matrix")
    return NormalizationStats(
        column_names=tuple(matrix.column_names),
        mean=rows.mean(axis=0),
        sigma=rows.std(axis=0),
    )


def zscore_apply(matrix, stats: NormalizationStats):
    """Apply (x - mean) / sigma per column; constant columns map to 0."""
    from .errors import ShapeError

    if tuple(matrix.column_names) != tuple(stats.column_names):
        raise ShapeError(
            f"column mismatch: matrix has {list(matrix.column_names)}, "
            f"stats were fit on {list(stats.column_names)}"
        )
    return dataclasses.replace(matrix, rows=stats.transform(np.asarray(matrix.rows, dtype=float)))


@dataclass(frozen=True)
class SplitPlan:
    """Deterministic shuffle-and-split plan: holdout fraction or k folds."""

    kind: str  # "holdout" | "kfold"
    seed: int
    k: int = 0
    test_fraction: float = 0.0

    @classmethod
    def kfold(cls, k: int, seed: int = 0) -> "SplitPlan":
        return cls(kind="kfold", seed=seed, k=k)

    @classmethod
    def holdout(cls, test_fraction: float, seed: int = 0) -> "SplitPlan":
        return cls(kind="holdout", seed=seed, test_fraction=test_fraction)


def make_split(n: int | Dataset, plan: SplitPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    """Produce (train_indices, test_indices) partitions for a dataset of size n.

    K-fold partitions are disjoint, exhaustive, and differ in size by at most
    one (the first ``n % k`` folds take the extra record). Deterministic for a
    fixed seed.
    """
    if isinstance(n, Dataset):
        n = len(n)
    rng = np.random.default_rng(plan.seed)
    perm = rng.permutation(n)
    if plan.kind == "holdout":
        if not 0.0 < plan.test_fraction < 1.0:
            raise ValueError(f"test_fraction must be in (0, 1), got {plan.test_fraction}")
        n_test = max(1, int(round(plan.test_fraction * n)))
        if n_test >= n:
            raise ValueError("holdout leaves no training records")
        return [(np.sort(perm[n_test:]), np.sort(perm[:n_test]))]
    if plan.kind == "kfold":
        k = plan.k
        if k < 2:
            raise ValueError(f"k must be >= 2, got {k}")
        if k > n:
            raise ValueError(f"k={k} exceeds record count n={n}")
        sizes = np.full(k, n // k)
        sizes[: n % k] += 1
        splits = []
        start = 0
        for size in sizes:
            test = np.sort(perm[start : start + size])
            train = np.sort(np.concatenate([perm[:start], perm[start + size :]]))
            splits.append((train, test))
            start += size
        return splits
    raise ValueError(f"unknown split kind {plan.kind!r}")

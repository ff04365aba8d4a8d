"""Design-matrix assembly from meltpool records.

A :class:`FeatureSpec` names the feature groups, the prediction target, and
the two physics knobs (ambient temperature, minimum absorptivity). Assembly
drops records missing any required field, resolves materials through the
registry, and emits columns in a deterministic order: process one-hot, power,
speed, beam diameter (classification, or when requested), thermal properties,
then the optional groups in spec order.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import materials as mat_mod
from .dataset import (
    CLASS_IDS,
    Dataset,
    MeltpoolRecord,
    PROCESS_ORDER,
    filter_complete,
)
from .errors import EmptyMatrixError, EncodingError, PhysicsDomainError, PropertyCoverageError
from .materials import ELEMENT_ORDER, ELEMENT_PROPERTIES, MaterialSpec, lookup_material

DEFAULT_AMBIENT_TEMP = 298.15  # K
DEFAULT_MIN_ABSORPTIVITY = 0.3


class FeatureGroup(str, Enum):
    PROCESS_ONE_HOT = "process_one_hot"
    BEAM_POWER = "beam_power"
    SCAN_SPEED = "scan_speed"
    BEAM_DIAMETER = "beam_diameter"
    THERMAL_PROPS = "thermal_props"
    MATERIAL_ONE_HOT = "material_one_hot"
    CHEMICAL_COMPOSITION = "chemical_composition"
    ELEMENTAL_FEATURES = "elemental_features"
    HATCH_SPACING = "hatch_spacing"
    LAYER_THICKNESS = "layer_thickness"
    ABSORPTIVITY1 = "absorptivity1"
    ABSORPTIVITY2 = "absorptivity2"


class Target(str, Enum):
    DEPTH = "depth"
    WIDTH = "width"
    LENGTH = "length"
    DEFECT_CLASS = "defect_class"


#: Core groups emitted first, in this order, whenever selected.
_CORE_ORDER = [
    FeatureGroup.PROCESS_ONE_HOT,
    FeatureGroup.BEAM_POWER,
    FeatureGroup.SCAN_SPEED,
    FeatureGroup.BEAM_DIAMETER,
    FeatureGroup.THERMAL_PROPS,
]

BASELINE_GROUPS = (
    FeatureGroup.PROCESS_ONE_HOT,
    FeatureGroup.BEAM_POWER,
    FeatureGroup.SCAN_SPEED,
    FeatureGroup.THERMAL_PROPS,
)

#: Groups whose values require thermal properties from the registry.
_NEEDS_THERMAL = {
    FeatureGroup.THERMAL_PROPS,
    FeatureGroup.ABSORPTIVITY1,
    FeatureGroup.ABSORPTIVITY2,
}


class LeakageWarning(UserWarning):
    """Feature set leaks the prediction target."""


@dataclass(frozen=True)
class FeatureSpec:
    """Declarative description of a design matrix."""

    groups: tuple[FeatureGroup, ...]
    target: Target
    ambient_temp: float = DEFAULT_AMBIENT_TEMP
    min_absorptivity: float = DEFAULT_MIN_ABSORPTIVITY

    def effective_groups(self) -> list[FeatureGroup]:
        """Deduplicated groups in emission order; classification forces beam diameter."""
        groups = list(dict.fromkeys(self.groups))
        if self.target is Target.DEFECT_CLASS and FeatureGroup.BEAM_DIAMETER not in groups:
            groups.append(FeatureGroup.BEAM_DIAMETER)
        core = [g for g in _CORE_ORDER if g in groups]
        rest = [g for g in groups if g not in _CORE_ORDER]
        return core + rest

    def to_dict(self) -> dict:
        return {
            "groups": [g.value for g in self.groups],
            "target": self.target.value,
            "ambient_temp": self.ambient_temp,
            "min_absorptivity": self.min_absorptivity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        return cls(
            groups=tuple(FeatureGroup(g) for g in d["groups"]),
            target=Target(d["target"]),
            ambient_temp=float(d.get("ambient_temp", DEFAULT_AMBIENT_TEMP)),
            min_absorptivity=float(d.get("min_absorptivity", DEFAULT_MIN_ABSORPTIVITY)),
        )


def baseline_spec(target: Target | str, extra: tuple[FeatureGroup, ...] = (), **kwargs) -> FeatureSpec:
    """Baseline featurization for a target, optionally extended."""
    return FeatureSpec(groups=BASELINE_GROUPS + tuple(extra), target=Target(target), **kwargs)


@dataclass(frozen=True)
class FeatureMatrix:
    """Assembled numeric design matrix with column metadata."""

    rows: np.ndarray
    column_names: tuple[str, ...]
    row_index: np.ndarray  # indices into the source dataset
    target_values: np.ndarray

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def take(self, idx) -> "FeatureMatrix":
        return dataclasses.replace(
            self,
            rows=self.rows[idx],
            row_index=self.row_index[idx],
            target_values=self.target_values[idx],
        )


def one_hot(values: list, categories: list | None = None) -> tuple[list[str], np.ndarray]:
    """Binary-encode a categorical column.

    Categories default to the sorted distinct values; each row gets exactly
    one 1 among the category columns.
    """
    if categories is None:
        categories = sorted(set(values))
    index = {c: j for j, c in enumerate(categories)}
    rows = np.zeros((len(values), len(categories)))
    for i, v in enumerate(values):
        if v not in index:
            raise EncodingError(f"value {v!r} outside category set {list(categories)}")
        rows[i, index[v]] = 1.0
    return list(categories), rows


def absorptivity1(
    power: float,
    velocity: float,
    beam_radius: float,
    mat: MaterialSpec,
    ambient_temp: float = DEFAULT_AMBIENT_TEMP,
    min_absorptivity: float = DEFAULT_MIN_ABSORPTIVITY,
) -> float:
    """Keyhole-regime absorptivity estimate, strictly inside (0, 0.7).

    eta = 0.7 * (1 - exp(-0.6 * eta_m * P / ((Tm - T0) * pi * rho * Cp * V * r0^2)))
    """
    mat.require_thermal()
    if mat.melting_temp <= ambient_temp:
        raise PhysicsDomainError(
            f"melting temperature {mat.melting_temp} K must exceed ambient {ambient_temp} K"
        )
    if beam_radius <= 0:
        raise PhysicsDomainError(f"beam radius must be > 0, got {beam_radius}")
    if power <= 0 or velocity <= 0 or min_absorptivity <= 0:
        raise PhysicsDomainError("power, velocity, and minimum absorptivity must be > 0")
    x = (
        0.6
        * min_absorptivity
        * power
        / (
            (mat.melting_temp - ambient_temp)
            * math.pi
            * mat.density
            * mat.specific_heat
            * velocity
            * beam_radius**2
        )
    )
    # expm1 keeps eta > 0 for tiny x; the clamp keeps eta < 0.7 when exp(-x)
    # underflows, so the open-interval bound survives floating point
    eta = 0.7 * -math.expm1(-x)
    return min(eta, math.nextafter(0.7, 0.0))


def absorptivity2(
    power: float,
    velocity: float,
    measured_width: float,
    mat: MaterialSpec,
    ambient_temp: float = DEFAULT_AMBIENT_TEMP,
) -> float:
    """Conduction-regime absorptivity from the measured meltpool width.

    eta = (pi k (Tm - T0) W + e pi rho Cp (Tm - T0) V W^2 / 8) / P
    """
    mat.require_thermal()
    if mat.melting_temp <= ambient_temp:
        raise PhysicsDomainError(
            f"melting temperature {mat.melting_temp} K must exceed ambient {ambient_temp} K"
        )
    if power <= 0 or velocity <= 0 or measured_width <= 0:
        raise PhysicsDomainError("power, velocity, and width must be > 0")
    dt = mat.melting_temp - ambient_temp
    conduction = math.pi * mat.conductivity * dt * measured_width
    advection = math.e * math.pi * mat.density * mat.specific_heat * dt * velocity * measured_width**2 / 8.0
    return (conduction + advection) / power


def required_fields(spec: FeatureSpec) -> set[str]:
    """Record fields that must be present for a spec (target included)."""
    groups = set(spec.effective_groups())
    req = set()
    if FeatureGroup.BEAM_DIAMETER in groups or FeatureGroup.ABSORPTIVITY1 in groups:
        req.add("beam_diameter")
    if FeatureGroup.ABSORPTIVITY2 in groups:
        req.add("width")
    if FeatureGroup.HATCH_SPACING in groups:
        req.add("hatch_spacing")
    if FeatureGroup.LAYER_THICKNESS in groups:
        req.add("layer_thickness")
    req.add(spec.target.value)
    return req


def _material_of(record: MeltpoolRecord) -> MaterialSpec:
    return lookup_material(record.material_name)


def _record_values(spec: FeatureSpec, group: FeatureGroup, r: MeltpoolRecord) -> list[float]:
    """Per-record values for the scalar groups (one-hot blocks handled apart)."""
    if group is FeatureGroup.BEAM_POWER:
        return [r.power]
    if group is FeatureGroup.SCAN_SPEED:
        return [r.velocity]
    if group is FeatureGroup.BEAM_DIAMETER:
        return [r.beam_diameter]
    if group is FeatureGroup.THERMAL_PROPS:
        m = _material_of(r).require_thermal()
        return [m.density, m.specific_heat, m.conductivity, m.melting_temp]
    if group is FeatureGroup.CHEMICAL_COMPOSITION:
        comp = _material_of(r).composition
        return [comp.get(el, 0.0) for el in ELEMENT_ORDER]
    if group is FeatureGroup.ELEMENTAL_FEATURES:
        return mat_mod.elemental_feature_vector(_material_of(r))
    if group is FeatureGroup.HATCH_SPACING:
        return [r.hatch_spacing]
    if group is FeatureGroup.LAYER_THICKNESS:
        return [r.layer_thickness]
    if group is FeatureGroup.ABSORPTIVITY1:
        return [
            absorptivity1(
                r.power,
                r.velocity,
                r.beam_diameter / 2.0,
                _material_of(r),
                spec.ambient_temp,
                spec.min_absorptivity,
            )
        ]
    if group is FeatureGroup.ABSORPTIVITY2:
        return [
            absorptivity2(r.power, r.velocity, r.width, _material_of(r), spec.ambient_temp)
        ]
    raise ValueError(f"group {group} has no scalar value path")


def _group_names(group: FeatureGroup) -> list[str]:
    if group is FeatureGroup.BEAM_POWER:
        return ["power"]
    if group is FeatureGroup.SCAN_SPEED:
        return ["velocity"]
    if group is FeatureGroup.BEAM_DIAMETER:
        return ["beam_diameter"]
    if group is FeatureGroup.THERMAL_PROPS:
        return ["rho", "cp", "k", "tm"]
    if group is FeatureGroup.CHEMICAL_COMPOSITION:
        return [f"wt_{el}" for el in ELEMENT_ORDER]
    if group is FeatureGroup.ELEMENTAL_FEATURES:
        return [f"elem_{p}" for p in ELEMENT_PROPERTIES]
    if group is FeatureGroup.HATCH_SPACING:
        return ["hatch_spacing"]
    if group is FeatureGroup.LAYER_THICKNESS:
        return ["layer_thickness"]
    if group is FeatureGroup.ABSORPTIVITY1:
        return ["absorptivity1"]
    if group is FeatureGroup.ABSORPTIVITY2:
        return ["absorptivity2"]
    raise ValueError(f"group {group} has no fixed column names")


def assemble(ds: Dataset, spec: FeatureSpec) -> FeatureMatrix:
    """Build the design matrix for ``spec`` over the labeled, complete records."""
    if spec.target is Target.WIDTH and FeatureGroup.ABSORPTIVITY2 in spec.groups:
        warnings.warn(
            "absorptivity2 is computed from the measured width: selecting it for "
            "width prediction leaks the label",
            LeakageWarning,
            stacklevel=2,
        )
    req = required_fields(spec)
    survivors = [
        (i, r) for i, r in enumerate(ds.records) if all(r.get(f) is not None for f in req)
    ]
    if not survivors:
        counts = {
            f: sum(1 for r in ds.records if r.get(f) is not None) for f in sorted(req)
        }
        binding = min(counts, key=counts.get) if counts else "<none>"
        raise EmptyMatrixError(
            f"no records satisfy required fields {sorted(req)}; "
            f"binding constraint: {binding!r} present in {counts.get(binding, 0)}/{len(ds)} records"
        )
    idx = np.array([i for i, _ in survivors])
    records = [r for _, r in survivors]

    names: list[str] = []
    blocks: list[np.ndarray] = []
    for group in spec.effective_groups():
        if group is FeatureGroup.PROCESS_ONE_HOT:
            cats, rows = one_hot(
                [r.process.value for r in records], [p.value for p in PROCESS_ORDER]
            )
            names += [f"process={c}" for c in cats]
            blocks.append(rows)
        elif group is FeatureGroup.MATERIAL_ONE_HOT:
            cats, rows = one_hot([r.material_name for r in records])
            names += [f"material={c}" for c in cats]
            blocks.append(rows)
        else:
            names += _group_names(group)
            blocks.append(
                np.array([_record_values(spec, group, r) for r in records], dtype=float)
            )

    if spec.target is Target.DEFECT_CLASS:
        targets = np.array([CLASS_IDS[r.defect_class] for r in records], dtype=int)
    else:
        targets = np.array([r.get(spec.target.value) for r in records], dtype=float)

    return FeatureMatrix(
        rows=np.hstack(blocks),
        column_names=tuple(names),
        row_index=idx,
        target_values=targets,
    )


def featurize_query(
    spec: FeatureSpec, column_names: tuple[str, ...], record: MeltpoolRecord
) -> np.ndarray:
    """Featurize a single prediction request against a trained column layout.

    Material one-hot categories are recovered from the stored column names so
    the row aligns bit-for-bit with the training matrix. Absorptivity-2 specs
    are rejected: the measured width does not exist at prediction time.
    """
    groups = spec.effective_groups()
    if FeatureGroup.ABSORPTIVITY2 in groups:
        raise PropertyCoverageError(
            "absorptivity2 requires the measured meltpool width, which is "
            "unavailable at prediction time"
        )
    for f in required_fields(spec) - {spec.target.value}:
        if record.get(f) is None:
            raise EncodingError(f"prediction request missing required feature {f!r}")
    values: list[float] = []
    for group in groups:
        if group is FeatureGroup.PROCESS_ONE_HOT:
            _, rows = one_hot([record.process.value], [p.value for p in PROCESS_ORDER])
            values += rows[0].tolist()
        elif group is FeatureGroup.MATERIAL_ONE_HOT:
            cats = [n.split("=", 1)[1] for n in column_names if n.startswith("material=")]
            _, rows = one_hot([record.material_name], cats)
            values += rows[0].tolist()
        else:
            values += _record_values(spec, group, record)
    row = np.array(values, dtype=float)
    if row.shape[0] != len(column_names):
        raise EncodingError(
            f"featurized request has {row.shape[0]} columns, model expects {len(column_names)}"
        )
    return row

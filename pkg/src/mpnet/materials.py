"""Alloy registry and elemental featurization via the linear mixture rule.

The registry is loaded from the bundled ``data/materials.csv`` and
``data/elements.csv`` (see ``data/README.md`` for provenance). Compositions
are renormalized to mass fractions summing to 1; an alloy-level feature is the
composition-weighted sum of the per-element property values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import MaterialLookupError, PropertyCoverageError

#: Element column order of the composition table; also the order of the
#: chemical-composition feature block.
ELEMENT_ORDER = [
    "Y", "Zn", "Mg", "Si", "Al", "Sn", "Zr", "W", "Ti", "V",
    "Co", "Cu", "Ta", "Nb", "Ni", "Cr", "Fe", "Mn", "Mo",
]

#: Elemental properties used for featurization, in fixed column order.
ELEMENT_PROPERTIES = [
    "atomic_number",
    "atomic_volume",
    "ionization_energy",
    "heat_of_fusion",
    "electron_affinity",
]

_PROPERTY_COLUMNS = {
    "atomic_number": "atomic_number",
    "atomic_volume": "atomic_volume_cm3_mol",
    "ionization_energy": "ionization_energy_ev",
    "heat_of_fusion": "heat_of_fusion_kj_mol",
    "electron_affinity": "electron_affinity_ev",
}


@dataclass(frozen=True)
class ElementProps:
    symbol: str
    atomic_number: float
    atomic_volume: float
    ionization_energy: float
    heat_of_fusion: float
    electron_affinity: float


@dataclass(frozen=True)
class MaterialSpec:
    """Alloy composition (mass fractions) and bulk thermal properties.

    ``density``, ``specific_heat``, ``conductivity``, and ``melting_temp`` are
    ``None`` for alloys the registry covers only compositionally.
    """

    name: str
    composition: dict[str, float]
    density: float | None = None
    specific_heat: float | None = None
    conductivity: float | None = None
    melting_temp: float | None = None

    @property
    def has_thermal(self) -> bool:
        return self.density is not None

    def require_thermal(self) -> "MaterialSpec":
        if not self.has_thermal:
            raise PropertyCoverageError(
                f"material {self.name!r} has no thermal properties in the registry"
            )
        return self


def _renormalize(weights: dict[str, float]) -> dict[str, float]:
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("composition weights sum to zero")
    return {el: w / total for el, w in weights.items()}


def _data_text(filename: str) -> str:
    return resources.files("mpnet.data").joinpath(filename).read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def element_registry() -> dict[str, ElementProps]:
    rows = list(csv.DictReader(_data_text("elements.csv").splitlines()))
    registry = {}
    for row in rows:
        registry[row["symbol"]] = ElementProps(
            symbol=row["symbol"],
            atomic_number=float(row["atomic_number"]),
            atomic_volume=float(row["atomic_volume_cm3_mol"]),
            ionization_energy=float(row["ionization_energy_ev"]),
            heat_of_fusion=float(row["heat_of_fusion_kj_mol"]),
            electron_affinity=float(row["electron_affinity_ev"]),
        )
    return registry


@lru_cache(maxsize=1)
def material_registry() -> dict[str, MaterialSpec]:
    rows = list(csv.DictReader(_data_text("materials.csv").splitlines()))
    registry = {}
    for row in rows:
        weights = {el: float(row[f"wt_{el}"]) for el in ELEMENT_ORDER}
        weights = {el: w for el, w in weights.items() if w > 0}
        thermal = {}
        for attr, col in (
            ("density", "density_kg_m3"),
            ("specific_heat", "specific_heat_j_kgk"),
            ("conductivity", "conductivity_w_mk"),
            ("melting_temp", "melting_temp_k"),
        ):
            cell = row[col].strip()
            thermal[attr] = float(cell) if cell else None
        registry[row["name"]] = MaterialSpec(
            name=row["name"], composition=_renormalize(weights), **thermal
        )
    return registry


def lookup_material(name: str) -> MaterialSpec:
    """Return the registry entry for ``name`` (composition renormalized)."""
    registry = material_registry()
    try:
        return registry[name]
    except KeyError:
        known = ", ".join(sorted(registry))
        raise MaterialLookupError(
            f"unknown material {name!r}; known materials: {known}"
        ) from None


def mixture_feature(spec: MaterialSpec, prop: str) -> float:
    """Composition-weighted sum of one elemental property over the alloy."""
    if prop not in ELEMENT_PROPERTIES:
        raise KeyError(f"unknown element property {prop!r}; choose from {ELEMENT_PROPERTIES}")
    elements = element_registry()
    total = 0.0
    for el, frac in spec.composition.items():
        if el not in elements:
            raise PropertyCoverageError(
                f"element {el!r} of material {spec.name!r} missing from element registry"
            )
        total += frac * getattr(elements[el], prop)
    return total


def elemental_feature_vector(spec: MaterialSpec) -> list[float]:
    """The five mixture-rule features in ``ELEMENT_PROPERTIES`` order."""
    return [mixture_feature(spec, p) for p in ELEMENT_PROPERTIES]

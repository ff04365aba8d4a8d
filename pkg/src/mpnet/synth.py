"""Synthetic data generators driven by the analytical heat-source model.

Used by the test suite, the acceptance checks, and the shipped sample file.
Geometry labels start from the point-source estimates; the depth picks up a
smooth keyhole gain with beam energy density and the pool elongates with
scan speed, so the rule-based defect classes carve learnable regions out of
the process-parameter space.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .dataset import CSV_HEADER, Dataset, DefectClass, MeltpoolRecord, Process
from .materials import MaterialSpec, lookup_material
from .rosenthal import rosenthal_depth, rosenthal_length

#: Pool aspect ratio above which a track is labeled balling.
BALLING_RATIO = 2.3

DEFAULT_MATERIALS = ["SS316L", "Ti-6Al-4V", "IN718", "Cu10Sn", "Tungsten"]


def classify_defect(
    depth: float,
    width: float,
    length: float,
    layer_thickness: float,
    balling_ratio: float = BALLING_RATIO,
) -> DefectClass:
    """Rule-based defect label: keyhole, then lack of fusion, then balling."""
    if depth > width / 2.0:
        return DefectClass.KEYHOLE
    if depth < layer_thickness:
        return DefectClass.LACK_OF_FUSION
    if length / width > balling_ratio:
        return DefectClass.BALLING
    return DefectClass.DESIRABLE


def _normalized_enthalpy(q: float, v: float, r0: float, mat: MaterialSpec, t0: float) -> float:
    dt = mat.melting_temp - t0
    diffusivity = mat.conductivity / (mat.density * mat.specific_heat)
    return q / (
        math.pi * mat.density * mat.specific_heat * dt * math.sqrt(diffusivity * v * r0**3)
    )


def _keyhole_gain(ne: float, ne0: float = 17.0) -> float:
    # smooth transition from conduction (g < 1) to keyholing (g > 1)
    return 0.55 + 1.7 / (1.0 + math.exp(-4.0 * (math.log(ne) - math.log(ne0))))


def _length_ratio(v: float) -> float:
    # pool elongates with scan speed; crosses the balling ratio near 1.2 m/s
    return 0.9 + 1.9 / (1.0 + math.exp(-4.0 * (v - 0.9)))


def synth_geometry(
    power: float,
    velocity: float,
    beam_diameter: float,
    mat: MaterialSpec,
    t0: float = 298.15,
    eta: float = 0.4,
    rng: np.random.Generator | None = None,
    noise: float = 0.0,
) -> tuple[float, float, float]:
    """Noisy (depth, width, length) in meters for one parameter set."""
    q = eta * power
    base_depth = rosenthal_depth(q, velocity, mat, t0, a=2.0)
    gain = _keyhole_gain(_normalized_enthalpy(q, velocity, beam_diameter / 2.0, mat, t0))
    width = 2.0 * base_depth
    depth = gain * base_depth
    length = width * _length_ratio(velocity)
    if rng is not None and noise > 0.0:
        factors = np.exp(rng.normal(0.0, noise, size=3))
        depth, width, length = depth * factors[0], width * factors[1], length * factors[2]
    return depth, width, length


def rosenthal_design(
    n: int,
    materials: list[str] = DEFAULT_MATERIALS,
    seed: int = 0,
    p_range: tuple[float, float] = (50.0, 400.0),
    v_range: tuple[float, float] = (0.2, 2.0),
    t0: float = 298.15,
    noise: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) pairs from the closed-form depth with A = 2.

    X columns are P, V, rho, Cp, k, (Tm - T0); y is the depth in meters with
    optional multiplicative lognormal noise. Used as the identification
    oracle: the exact exponents are (0.5, -0.5, -0.5, -0.5, 0, -0.5) and the
    multiplier is sqrt(2 / (e pi)).
    """
    rng = np.random.default_rng(seed)
    specs = [lookup_material(m).require_thermal() for m in materials]
    rows, ys = [], []
    for i in range(n):
        mat = specs[i % len(specs)]
        p = rng.uniform(*p_range)
        v = rng.uniform(*v_range)
        depth = rosenthal_depth(p, v, mat, t0, a=2.0)
        if noise > 0.0:
            depth *= math.exp(rng.normal(0.0, noise))
        rows.append(
            [p, v, mat.density, mat.specific_heat, mat.conductivity, mat.melting_temp - t0]
        )
        ys.append(depth)
    return np.array(rows), np.array(ys)


def make_regression_dataset(
    n: int,
    materials: list[str] = DEFAULT_MATERIALS,
    seed: int = 0,
    p_range: tuple[float, float] = (50.0, 400.0),
    v_range: tuple[float, float] = (0.2, 2.0),
    noise: float = 0.01,
    t0: float = 298.15,
    processes: tuple[Process, ...] = tuple(Process),
    beam_diameter_range: tuple[float, float] = (60e-6, 120e-6),
) -> Dataset:
    """Records with full geometry labels from the noisy generator."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        mat = lookup_material(materials[i % len(materials)])
        process = processes[i % len(processes)]
        p = float(rng.uniform(*p_range))
        v = float(rng.uniform(*v_range))
        d0 = float(rng.uniform(*beam_diameter_range))
        depth, width, length = synth_geometry(p, v, d0, mat, t0, rng=rng, noise=noise)
        pbf = process in (Process.LPBF, Process.EPBF)
        records.append(
            MeltpoolRecord(
                source_id=f"synth-{i:04d}",
                process=process,
                material_name=mat.name,
                power=p,
                velocity=v,
                beam_diameter=d0,
                layer_thickness=float(rng.uniform(15e-6, 45e-6)) if pbf else None,
                hatch_spacing=float(rng.uniform(50e-6, 150e-6)) if rng.random() < 0.7 else None,
                depth=depth,
                width=width,
                length=length,
            )
        )
    return Dataset(records=tuple(records), source=f"synthetic(seed={seed})")


def make_classification_dataset(
    n: int,
    materials: list[str] = ("SS316L", "Ti-6Al-4V", "IN718"),
    seed: int = 0,
    p_range: tuple[float, float] = (60.0, 350.0),
    v_range: tuple[float, float] = (0.3, 2.0),
    noise: float = 0.015,
    t0: float = 298.15,
    beam_diameter_range: tuple[float, float] = (60e-6, 120e-6),
) -> Dataset:
    """PBF records labeled with the rule-based defect classes."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        mat = lookup_material(materials[i % len(materials)])
        process = Process.LPBF if i % 2 == 0 else Process.EPBF
        p = float(rng.uniform(*p_range))
        v = float(rng.uniform(*v_range))
        d0 = float(rng.uniform(*beam_diameter_range))
        t_layer = float(rng.uniform(15e-6, 45e-6))
        depth, width, length = synth_geometry(p, v, d0, mat, t0, rng=rng, noise=noise)
        records.append(
            MeltpoolRecord(
                source_id=f"synthc-{i:04d}",
                process=process,
                material_name=mat.name,
                power=p,
                velocity=v,
                beam_diameter=d0,
                layer_thickness=t_layer,
                hatch_spacing=float(rng.uniform(50e-6, 150e-6)) if rng.random() < 0.7 else None,
                depth=depth,
                width=width,
                length=length,
                defect_class=classify_defect(depth, width, length, t_layer),
            )
        )
    return Dataset(records=tuple(records), source=f"synthetic-cls(seed={seed})")


def write_csv(ds: Dataset, path: str | Path):
    """Write records back out in the ingestion schema (geometry in um)."""

    def um(v):
        return f"{v * 1e6:.6g}" if v is not None else ""

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in ds.records:
            writer.writerow(
                [
                    r.source_id,
                    r.process.value,
                    r.material_name,
                    f"{r.power:.6g}",
                    f"{r.velocity:.6g}",
                    um(r.beam_diameter),
                    um(r.layer_thickness),
                    um(r.hatch_spacing),
                    um(r.depth),
                    um(r.width),
                    um(r.length),
                    r.defect_class.value if r.defect_class else "",
                ]
            )


def make_sample_dataset(seed: int = 2024) -> Dataset:
    """The shipped sample: mixed processes/materials, partial labels."""
    rng = np.random.default_rng(seed)
    materials = [
        "SS316L", "Ti-6Al-4V", "IN718", "Cu10Sn", "Tungsten",
        "AlSi10Mg", "Hastelloy X", "IN625",
    ]
    records = []
    reg = make_regression_dataset(
        140, materials=materials, seed=seed, noise=0.02,
    )
    for i, r in enumerate(reg.records):
        # drop the length label on a third of the rows: partial coverage
        length = r.length if rng.random() < 0.66 else None
        defect = None
        if r.process in (Process.LPBF, Process.EPBF) and r.layer_thickness is not None:
            defect = classify_defect(r.depth, r.width, r.length, r.layer_thickness)
        records.append(
            MeltpoolRecord(
                source_id=f"sample-{i:04d}",
                process=r.process,
                material_name=r.material_name,
                power=r.power,
                velocity=r.velocity,
                beam_diameter=r.beam_diameter,
                layer_thickness=r.layer_thickness,
                hatch_spacing=r.hatch_spacing,
                depth=r.depth,
                width=r.width,
                length=length,
                defect_class=defect,
            )
        )
    cls = make_classification_dataset(60, seed=seed + 1, noise=0.015)
    offset = len(records)
    for i, r in enumerate(cls.records):
        records.append(
            MeltpoolRecord(
                source_id=f"sample-{offset + i:04d}",
                process=r.process,
                material_name=r.material_name,
                power=r.power,
                velocity=r.velocity,
                beam_diameter=r.beam_diameter,
                layer_thickness=r.layer_thickness,
                hatch_spacing=r.hatch_spacing,
                depth=r.depth,
                width=r.width,
                length=r.length,
                defect_class=r.defect_class,
            )
        )
    return Dataset(records=tuple(records), source=f"sample(seed={seed})")

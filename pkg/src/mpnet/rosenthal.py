"""Moving point-source temperature field and closed-form meltpool geometry.

Steady-state semi-infinite solid, absorbed power Q moving at speed V:

    T - T0 = Q / (2 pi K R) * exp(rho Cp V (Z - R) / (2 K))

with R = sqrt(Z^2 + r^2), Z measured along the scan direction (opposite V)
and r the radial distance from the source line. The meltpool depth, width,
and length estimates follow from the isotherm T = Tm:

    depth  = sqrt(A Q / (e pi rho Cp (Tm - T0) V))
    width  = 2 * depth
    length = Q / (2 pi K (Tm - T0))        (exponent vanishes at Z = R)

A is a geometry constant: 2.5 for AlSi10Mg, 2.0 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PhysicsDomainError
from .materials import MaterialSpec

#: Default geometry constant and the alloy-specific override.
DEFAULT_A = 2.0
A_OVERRIDES = {"AlSi10Mg": 2.5}


def geometry_constant(material_name: str) -> float:
    return A_OVERRIDES.get(material_name, DEFAULT_A)


@dataclass(frozen=True)
class RosenthalQuery:
    """Point query of the temperature field."""

    absorbed_power: float  # W
    velocity: float  # m/s
    material: MaterialSpec
    ambient_temp: float  # K
    z: float  # m, along scan direction
    r: float  # m, radial distance from the source line


def _check_material(mat: MaterialSpec, t0: float) -> MaterialSpec:
    mat.require_thermal()
    if mat.melting_temp <= t0:
        raise PhysicsDomainError(
            f"melting temperature {mat.melting_temp} K must exceed ambient {t0} K"
        )
    return mat


def rosenthal_temperature(q: RosenthalQuery) -> float:
    """Temperature at (z, r); singular at the source point itself."""
    mat = q.material.require_thermal()
    if q.absorbed_power <= 0:
        raise PhysicsDomainError(f"absorbed power must be > 0, got {q.absorbed_power}")
    radius = math.hypot(q.z, q.r)
    if radius == 0.0:
        raise PhysicsDomainError("R = 0 is the point-source singularity")
    k = mat.conductivity
    peak = q.absorbed_power / (2.0 * math.pi * k * radius)
    decay = math.exp(
        mat.density * mat.specific_heat * q.velocity * (q.z - radius) / (2.0 * k)
    )
    return q.ambient_temp + peak * decay


def rosenthal_depth(
    absorbed_power: float,
    velocity: float,
    mat: MaterialSpec,
    ambient_temp: float,
    a: float | None = None,
) -> float:
    """Meltpool depth estimate, meters."""
    _check_material(mat, ambient_temp)
    if absorbed_power <= 0 or velocity <= 0:
        raise PhysicsDomainError("absorbed power and velocity must be > 0")
    if a is None:
        a = geometry_constant(mat.name)
    denom = (
        math.e
        * math.pi
        * mat.density
        * mat.specific_heat
        * (mat.melting_temp - ambient_temp)
        * velocity
    )
    return math.sqrt(a * absorbed_power / denom)


def rosenthal_width(
    absorbed_power: float,
    velocity: float,
    mat: MaterialSpec,
    ambient_temp: float,
    a: float | None = None,
) -> float:
    """Meltpool width estimate: exactly twice the depth."""
    return 2.0 * rosenthal_depth(absorbed_power, velocity, mat, ambient_temp, a)


def rosenthal_length(absorbed_power: float, mat: MaterialSpec, ambient_temp: float) -> float:
    """Meltpool length estimate, meters; independent of scan speed."""
    _check_material(mat, ambient_temp)
    if absorbed_power <= 0:
        raise PhysicsDomainError("absorbed power must be > 0")
    return absorbed_power / (
        2.0 * math.pi * mat.conductivity * (mat.melting_temp - ambient_temp)
    )


def geometry_estimates(
    absorbed_power: float,
    velocity: float,
    mat: MaterialSpec,
    ambient_temp: float,
    a: float | None = None,
) -> dict[str, float]:
    """Depth/width/length in micrometers, as served by the CLI and API."""
    depth = rosenthal_depth(absorbed_power, velocity, mat, ambient_temp, a)
    return {
        "depth_um": depth * 1e6,
        "width_um": 2.0 * depth * 1e6,
        "length_um": rosenthal_length(absorbed_power, mat, ambient_temp) * 1e6,
    }

"""Embedded HTTP JSON API for predictions and process maps.

Serves a directory of model bundles plus the material registry to the
browser explorer. Handlers only read an immutable registry snapshot, so
concurrent requests are safe; reload swaps the snapshot atomically. Bundles
whose feature spec needs the measured width (absorptivity 2) are refused at
load time: that feature cannot exist at prediction time.
"""

from __future__ import annotations

import json
import mimetypes
import warnings
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .bundle import ModelBundle, load_bundle
from .dataset import CLASS_ORDER, MeltpoolRecord, Process
from .errors import MpnetError
from .evaluate import decision_boundary_grid
from .featurize import DEFAULT_AMBIENT_TEMP, DEFAULT_MIN_ABSORPTIVITY, FeatureGroup
from .materials import material_registry
from .rosenthal import geometry_estimates

MICRON = 1e-6


class RequestError(Exception):
    def __init__(self, status: int, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.status = status
        self.payload = {"error": message}
        if fields:
            self.payload["fields"] = fields


@dataclass(frozen=True)
class ModelRegistry:
    """Immutable snapshot of the deployable models."""

    bundles: dict[str, ModelBundle]
    ambient_temp: float = DEFAULT_AMBIENT_TEMP
    min_absorptivity: float = DEFAULT_MIN_ABSORPTIVITY

    @classmethod
    def load_dir(
        cls,
        path: str | Path,
        ambient_temp: float = DEFAULT_AMBIENT_TEMP,
        min_absorptivity: float = DEFAULT_MIN_ABSORPTIVITY,
    ) -> "ModelRegistry":
        bundles = {}
        for file in sorted(Path(path).glob("*.json")):
            try:
                bundle = load_bundle(file)
            except (ValueError, KeyError) as exc:
                warnings.warn(f"skipping {file.name}: not a model bundle ({exc})")
                continue
            if FeatureGroup.ABSORPTIVITY2 in bundle.spec.groups:
                warnings.warn(
                    f"refusing {file.name}: its features include absorptivity2, "
                    "which requires the measured width and cannot be served"
                )
                continue
            bundles[bundle.name] = bundle
        return cls(
            bundles=bundles,
            ambient_temp=ambient_temp,
            min_absorptivity=min_absorptivity,
        )


def record_from_query(payload: dict) -> MeltpoolRecord:
    """Build a record from a prediction request (geometry fields in um)."""
    missing = [k for k in ("process", "material", "power_w", "velocity_m_s") if k not in payload]
    if missing:
        raise RequestError(400, "missing required fields", fields=missing)
    try:
        process = Process(payload["process"])
    except ValueError:
        raise RequestError(
            400, f"unknown process {payload['process']!r}", fields=["process"]
        ) from None

    def number(key):
        if key not in payload or payload[key] is None:
            return None
        try:
            return float(payload[key])
        except (TypeError, ValueError):
            raise RequestError(400, f"field {key!r} must be a number", fields=[key]) from None

    def microns(key):
        v = number(key)
        return None if v is None else v * MICRON

    try:
        return MeltpoolRecord(
            source_id="query",
            process=process,
            material_name=str(payload["material"]),
            power=number("power_w"),
            velocity=number("velocity_m_s"),
            beam_diameter=microns("beam_diameter_um"),
            layer_thickness=microns("layer_thickness_um"),
            hatch_spacing=microns("hatch_spacing_um"),
        )
    except (TypeError, ValueError) as exc:
        raise RequestError(400, str(exc)) from None


def predict_payload(registry: ModelRegistry, payload: dict) -> dict:
    name = payload.get("model")
    if not name:
        raise RequestError(400, "missing required fields", fields=["model"])
    bundle = registry.bundles.get(name)
    if bundle is None:
        raise RequestError(404, f"unknown model {name!r}")
    record = record_from_query(payload)
    materials = material_registry()
    if record.material_name not in materials:
        raise RequestError(404, f"unknown material {record.material_name!r}")
    try:
        prediction = bundle.predict_record(record)
    except MpnetError as exc:
        raise RequestError(400, str(exc)) from None

    out: dict = {"model": name}
    if bundle.model.task == "classification":
        out["class_probs"] = {
            CLASS_ORDER[i].value: float(p) for i, p in enumerate(prediction)
        }
    else:
        out[f"{bundle.spec.target.value}_um"] = prediction * 1e6

    mat = materials[record.material_name]
    if mat.has_thermal and mat.melting_temp > registry.ambient_temp:
        q = registry.min_absorptivity * record.power
        out["rosenthal"] = geometry_estimates(
            q, record.velocity, mat, registry.ambient_temp
        )
    else:
        out["rosenthal"] = None
    return out


def processmap_payload(registry: ModelRegistry, payload: dict) -> dict:
    missing = [k for k in ("model", "material", "p_range", "v_range", "resolution") if k not in payload]
    if missing:
        raise RequestError(400, "missing required fields", fields=missing)
    bundle = registry.bundles.get(payload["model"])
    if bundle is None:
        raise RequestError(404, f"unknown model {payload['model']!r}")
    if payload["material"] not in material_registry():
        raise RequestError(404, f"unknown material {payload['material']!r}")
    try:
        resolution = int(payload["resolution"])
        p_lo, p_hi = (float(v) for v in payload["p_range"])
        v_lo, v_hi = (float(v) for v in payload["v_range"])
    except (TypeError, ValueError):
        raise RequestError(
            400, "p_range/v_range must be [lo, hi] numbers and resolution an integer",
            fields=["p_range", "v_range", "resolution"],
        ) from None
    if not 2 <= resolution <= 200:
        raise RequestError(400, "resolution must be between 2 and 200", fields=["resolution"])
    fixed_raw = payload.get("fixed", {}) or {}
    fixed = {}
    if "process" in fixed_raw:
        fixed["process"] = fixed_raw["process"]
    for key in ("beam_diameter_um", "layer_thickness_um", "hatch_spacing_um"):
        if key in fixed_raw and fixed_raw[key] is not None:
            fixed[key.removesuffix("_um")] = float(fixed_raw[key]) * MICRON
    try:
        result = decision_boundary_grid(
            bundle, payload["material"], (p_lo, p_hi), (v_lo, v_hi), resolution, fixed
        )
    except MpnetError as exc:
        raise RequestError(400, str(exc)) from None
    return {
        "grid": result["grid"].tolist(),
        "p_axis": result["p_axis"].tolist(),
        "v_axis": result["v_axis"].tolist(),
        "classes": result["classes"],
        "material": result["material"],
    }


def materials_payload(registry: ModelRegistry) -> list[dict]:
    out = []
    for name, mat in sorted(material_registry().items()):
        out.append(
            {
                "name": name,
                "rho": mat.density,
                "cp": mat.specific_heat,
                "k": mat.conductivity,
                "tm": mat.melting_temp,
                "has_thermal": mat.has_thermal,
            }
        )
    return out


def models_payload(registry: ModelRegistry) -> list[dict]:
    return [
        {
            "name": name,
            "kind": b.model.kind,
            "target": b.spec.target.value,
            "features": [g.value for g in b.spec.groups],
        }
        for name, b in sorted(registry.bundles.items())
    ]


class _Handler(BaseHTTPRequestHandler):
    server_version = "mpnet"

    def log_message(self, *args):  # keep test output clean
        pass

    def _send_json(self, status: int, obj):
        body = json.dumps(obj, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", 0) or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            obj = json.loads(raw.decode("utf-8") or "null")
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise RequestError(400, f"malformed JSON body: {exc}") from None
        if not isinstance(obj, dict):
            raise RequestError(400, "request body must be a JSON object")
        return obj

    def do_GET(self):
        registry = self.server.app_registry
        path = self.path.split("?", 1)[0]
        if path == "/materials":
            return self._send_json(200, materials_payload(registry))
        if path == "/models":
            return self._send_json(200, models_payload(registry))
        if path == "/healthz":
            return self._send_json(200, {"ok": True, "models": len(registry.bundles)})
        return self._serve_static(path)

    def do_POST(self):
        registry = self.server.app_registry
        path = self.path.split("?", 1)[0]
        try:
            payload = self._read_json()
            if path == "/predict":
                return self._send_json(200, predict_payload(registry, payload))
            if path == "/processmap":
                return self._send_json(200, processmap_payload(registry, payload))
            return self._send_json(404, {"error": f"no such endpoint {path}"})
        except RequestError as exc:
            return self._send_json(exc.status, exc.payload)
        except MpnetError as exc:
            return self._send_json(400, {"error": str(exc)})

    def _serve_static(self, path: str):
        static_dir = self.server.static_dir
        if static_dir is None:
            return self._send_json(404, {"error": f"no such endpoint {path}"})
        rel = path.lstrip("/") or "index.html"
        file = (static_dir / rel).resolve()
        if not str(file).startswith(str(static_dir.resolve())) or not file.is_file():
            return self._send_json(404, {"error": f"no such file {path}"})
        ctype = mimetypes.guess_type(file.name)[0] or "application/octet-stream"
        body = file.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class MpnetServer(ThreadingHTTPServer):
    """HTTP server over an immutable model-registry snapshot."""

    daemon_threads = True

    def __init__(self, address, registry: ModelRegistry, static_dir: str | Path | None = None):
        super().__init__(address, _Handler)
        self.app_registry = registry
        self.static_dir = Path(static_dir) if static_dir else None

    def swap_registry(self, registry: ModelRegistry):
        # attribute assignment is atomic; in-flight requests keep the old snapshot
        self.app_registry = registry


def serve(
    registry: ModelRegistry,
    host: str = "127.0.0.1",
    port: int = 8173,
    static_dir: str | Path | None = None,
) -> MpnetServer:
    """Create (but do not start) the server; call serve_forever() to run."""
    return MpnetServer((host, port), registry, static_dir=static_dir)

"""Scenario records and the JSON scenario-file schema used by the CLI.

A scenario bundles everything a single outage evaluation needs: cell
geometry, the power/threshold set, the two Rician factors, the surface
protocol and the element count. The JSON layer fills in the standard
default for every omitted field, so a header echoing the resolved
scenario fully reproduces a run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Any

from .channels import (
    EnergySplit,
    ModeSwitch,
    ProtocolConfig,
    RicianParams,
    TimeSwitch,
    protocol_tag,
    rician_moments,
)
from .network import Geometry, PowerConfig, dbm_to_watts

__all__ = ["Scenario", "SchemaError", "resolve_scenario", "load_scenario_file", "scenario_to_json"]


class SchemaError(ValueError):
    """Scenario document malformed; message carries the offending key path."""


@dataclass(frozen=True)
class Scenario:
    geometry: Geometry
    power: PowerConfig
    rician_br: RicianParams
    rician_ru: RicianParams
    m_elements: int
    protocol: ProtocolConfig

    def __post_init__(self) -> None:
        if self.m_elements < 1:
            raise ValueError("element count must be >= 1")
        if isinstance(self.protocol, ModeSwitch):
            if self.protocol.m_rfl + self.protocol.m_rfr != self.m_elements:
                raise ValueError("mode-switch split must sum to the element count")

    def with_p_t(self, p_t_watts: float) -> "Scenario":
        return replace(self, power=replace(self.power, p_t=p_t_watts))

    def snr_db(self) -> float:
        """Transmit SNR rho_t = P_t / sigma^2 in dB."""
        return 10.0 * math.log10(self.power.p_t / self.power.sigma2)


# Default parameter block (the standard evaluation setup): 10 MHz
# carrier, -90 dBm noise (thermal floor + 10 dB noise figure over the
# carrier bandwidth), 2.4 path loss exponent, thresholds 2^0.1 - 1,
# 0.6/0.4 power split, 0.7/0.3 energy split, 100 m BS-surface hop,
# 20 m serving disc, 30 elements, k = 1 on both hops.
_GAMMA_TH_DEFAULT = 2.0**0.1 - 1.0

DEFAULTS: dict[str, Any] = {
    "geometry": {
        "d_br_m": 100.0,
        "radius_m": 20.0,
        "alpha_t": 2.4,
        "f_c_hz": 1.0e7,
    },
    "power": {
        "p_t_dbm": 24.0,
        "sigma2_dbm": -90.0,
        "a_rfl": 0.4,
        "a_rfr": 0.6,
        "gamma_th_sic": _GAMMA_TH_DEFAULT,
        "gamma_th_out": _GAMMA_TH_DEFAULT,
    },
    "rician": {"k1": 1.0, "k2": 1.0},
    "protocol": {"kind": "ES", "beta_rfl": 0.7, "beta_rfr": 0.3},
    "elements": 30,
    "sweep": {"variable": "p_t_dbm", "start": 10.0, "stop": 24.0, "points": 8},
    "mc": {"trials": 1_000_000, "seed": 1, "chunk_size": 65_536, "fit_samples": 200_000},
    "models": ["mc", "cl", "cf", "quad"],
}

_SWEEP_VARIABLES = ("p_t_dbm", "elements", "radius_m")
_MODEL_NAMES = ("mc", "cl", "cf", "quad", "mfold")


def _merged(section: str, doc: dict) -> dict:
    merged = dict(DEFAULTS[section])
    extra = doc.get(section, {})
    if not isinstance(extra, dict):
        raise SchemaError(f"{section}: expected an object")
    for key, value in extra.items():
        if key not in merged:
            raise SchemaError(f"{section}.{key}: unknown key")
        merged[key] = value
    return merged


def _require_number(path: str, value: Any, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}: expected a number, got {value!r}")
    if positive and not value > 0:
        raise SchemaError(f"{path}: must be positive, got {value!r}")
    return float(value)


def _require_int(path: str, value: Any, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path}: expected an integer, got {value!r}")
    if value < minimum:
        raise SchemaError(f"{path}: must be >= {minimum}, got {value!r}")
    return value


def _build_protocol(block: dict, m_elements: int) -> ProtocolConfig:
    kind = block.get("kind", "ES")
    if kind == "ES":
        return EnergySplit(
            beta_rfl=_require_number("protocol.beta_rfl", block.get("beta_rfl", 0.7)),
            beta_rfr=_require_number("protocol.beta_rfr", block.get("beta_rfr", 0.3)),
        )
    if kind == "MS":
        m_rfl = block.get("m_rfl")
        if m_rfl is None:
            m_rfl = math.ceil(0.7 * m_elements)
        m_rfl = _require_int("protocol.m_rfl", m_rfl)
        m_rfr = _require_int("protocol.m_rfr", block.get("m_rfr", m_elements - m_rfl))
        return ModeSwitch(m_rfl=m_rfl, m_rfr=m_rfr)
    if kind == "TS":
        return TimeSwitch(
            lambda_rfl=_require_number("protocol.lambda_rfl", block.get("lambda_rfl", 0.5)),
            lambda_rfr=_require_number("protocol.lambda_rfr", block.get("lambda_rfr", 0.5)),
        )
    raise SchemaError(f"protocol.kind: expected one of ES/MS/TS, got {kind!r}")


def resolve_scenario(doc: dict | None = None) -> tuple[Scenario, dict]:
    """Materialize a scenario plus the fully-resolved document.

    Raises :class:`SchemaError` with a dotted key path on any malformed
    entry. The returned document contains every default, so re-loading it
    reproduces the scenario exactly.
    """
    doc = doc or {}
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    for key in doc:
        if key not in DEFAULTS:
            raise SchemaError(f"{key}: unknown section")

    geo = _merged("geometry", doc)
    pw = _merged("power", doc)
    ric = _merged("rician", doc)
    mc = _merged("mc", doc)
    sweep = _merged("sweep", doc)

    m_elements = _require_int("elements", doc.get("elements", DEFAULTS["elements"]))
    proto_block = doc.get("protocol", DEFAULTS["protocol"])
    if not isinstance(proto_block, dict):
        raise SchemaError("protocol: expected an object")
    protocol = _build_protocol(proto_block, m_elements)

    if sweep["variable"] not in _SWEEP_VARIABLES:
        raise SchemaError(
            f"sweep.variable: expected one of {_SWEEP_VARIABLES}, got {sweep['variable']!r}"
        )
    _require_number("sweep.start", sweep["start"])
    _require_number("sweep.stop", sweep["stop"])
    _require_int("sweep.points", sweep["points"])

    models = doc.get("models", DEFAULTS["models"])
    if not isinstance(models, list) or not models:
        raise SchemaError("models: expected a nonempty list")
    for name in models:
        if name not in _MODEL_NAMES:
            raise SchemaError(f"models: unknown model {name!r}")

    geometry = Geometry(
        d_br=_require_number("geometry.d_br_m", geo["d_br_m"], positive=True),
        radius_r=_require_number("geometry.radius_m", geo["radius_m"], positive=True),
        alpha_t=_require_number("geometry.alpha_t", geo["alpha_t"], positive=True),
        f_c=_require_number("geometry.f_c_hz", geo["f_c_hz"], positive=True),
    )
    power = PowerConfig(
        p_t=dbm_to_watts(_require_number("power.p_t_dbm", pw["p_t_dbm"])),
        sigma2=dbm_to_watts(_require_number("power.sigma2_dbm", pw["sigma2_dbm"])),
        a_rfl=_require_number("power.a_rfl", pw["a_rfl"], positive=True),
        a_rfr=_require_number("power.a_rfr", pw["a_rfr"], positive=True),
        g_sic=_require_number("power.gamma_th_sic", pw["gamma_th_sic"], positive=True),
        g_out=_require_number("power.gamma_th_out", pw["gamma_th_out"], positive=True),
    )
    k1 = _require_number("rician.k1", ric["k1"])
    k2 = _require_number("rician.k2", ric["k2"])
    if k1 < 0 or k2 < 0:
        raise SchemaError("rician.k1/k2: shape factors must be >= 0")

    scenario = Scenario(
        geometry=geometry,
        power=power,
        rician_br=rician_moments(k1),
        rician_ru=rician_moments(k2),
        m_elements=m_elements,
        protocol=protocol,
    )

    resolved = {
        "geometry": geo,
        "power": pw,
        "rician": ric,
        "protocol": _protocol_doc(protocol),
        "elements": m_elements,
        "sweep": sweep,
        "mc": {
            "trials": _require_int("mc.trials", mc["trials"]),
            "seed": _require_int("mc.seed", mc["seed"], minimum=0),
            "chunk_size": _require_int("mc.chunk_size", mc["chunk_size"]),
            "fit_samples": _require_int("mc.fit_samples", mc["fit_samples"], minimum=1000),
        },
        "models": list(models),
    }
    return scenario, resolved


def _protocol_doc(proto: ProtocolConfig) -> dict:
    tag = protocol_tag(proto)
    if isinstance(proto, EnergySplit):
        return {"kind": tag, "beta_rfl": proto.beta_rfl, "beta_rfr": proto.beta_rfr}
    if isinstance(proto, ModeSwitch):
        return {"kind": tag, "m_rfl": proto.m_rfl, "m_rfr": proto.m_rfr}
    return {"kind": tag, "lambda_rfl": proto.lambda_rfl, "lambda_rfr": proto.lambda_rfr}


def load_scenario_file(path: str) -> tuple[Scenario, dict]:
    """Load and resolve a scenario JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return resolve_scenario(doc)


def scenario_to_json(resolved: dict) -> str:
    """Canonical one-line form of a resolved scenario (header embedding)."""
    return json.dumps(resolved, sort_keys=True, separators=(",", ":"))

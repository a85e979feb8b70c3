"""Declarative scenario files: schema, validation, presets, execution.

A scenario is a YAML document with explicit units in the key names
(meters, Hz, seconds, rpm, degrees).  Validation walks the parsed node
tree so every complaint carries the offending file line.  The full key
reference lives in the README; there are no defaults beyond the ones
listed there.

``run_scenario`` builds the configs, simulates, and writes the requested
artifacts (IQ frame, symbol matrix, range-Doppler map, metrics report).
Outputs are deterministic functions of the scenario content: no
timestamps, fixed encodings, seeded randomness only.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .drone import (
    BodyModelConfig,
    DroneConfig,
    S21Profile,
    VibrationConfig,
    select_s21_profile,
    simulate_drone,
)
from .geometry import SPEED_OF_LIGHT, BistaticLink, PropellerGeometry, bistatic_range
from .processing import extract_metrics, range_doppler
from .storage import file_record, save_iq, save_metrics, save_rdmap, save_rdmap_csv
from .waveform import OfdmConfig, generate_symbols, load_symbols, save_symbols

TWO_PI = 2.0 * np.pi


class ScenarioError(ValueError):
    """Scenario schema or semantics violation, with file:line anchoring."""


def rpm_to_rad_per_s(rpm: float) -> float:
    return TWO_PI * rpm / 60.0


# ---------------------------------------------------------------------------
# schema walking (line-anchored)

def _anchor(node, source: str) -> str:
    return f"{source}:{node.start_mark.line + 1}"


def _fail(node, source, path, message):
    raise ScenarioError(f"{_anchor(node, source)}: {path}: {message}")


def _as_scalar(node, source, path):
    if not isinstance(node, yaml.ScalarNode):
        _fail(node, source, path, "expected a scalar value")
    return yaml.safe_load(node.value) if node.tag != "tag:yaml.org,2002:str" else node.value


def _get_float(node, source, path):
    value = _as_scalar(node, source, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(node, source, path, f"expected a number, got {value!r}")
    return float(value)


def _get_int(node, source, path):
    value = _as_scalar(node, source, path)
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(node, source, path, f"expected an integer, got {value!r}")
    return int(value)


def _get_bool(node, source, path):
    value = _as_scalar(node, source, path)
    if not isinstance(value, bool):
        _fail(node, source, path, f"expected a boolean, got {value!r}")
    return bool(value)


def _get_str(node, source, path):
    if not isinstance(node, yaml.ScalarNode):
        _fail(node, source, path, "expected a string")
    return str(node.value)


def _get_vec3(node, source, path):
    if not isinstance(node, yaml.SequenceNode) or len(node.value) != 3:
        _fail(node, source, path, "expected a 3-element list [x, y, z]")
    return [_get_float(child, source, f"{path}[{k}]") for k, child in enumerate(node.value)]


def _get_complex(node, source, path):
    """Reflectivities: a plain number or a [re, im] pair."""
    if isinstance(node, yaml.SequenceNode):
        if len(node.value) != 2:
            _fail(node, source, path, "complex value must be [re, im]")
        re_part = _get_float(node.value[0], source, f"{path}[0]")
        im_part = _get_float(node.value[1], source, f"{path}[1]")
        return complex(re_part, im_part)
    return complex(_get_float(node, source, path))


def _mapping_items(node, source, path):
    if not isinstance(node, yaml.MappingNode):
        _fail(node, source, path, "expected a mapping (key: value section)")
    items = {}
    for key_node, value_node in node.value:
        items[str(key_node.value)] = value_node
    return items


def _check_keys(items: dict, allowed, source, node, path):
    unknown = sorted(set(items) - set(allowed))
    if unknown:
        _fail(node, source, path, f"unknown key(s) {unknown}; allowed: {sorted(allowed)}")


_SCENARIO_KEYS = {
    "name", "seed", "link", "drone", "propellers", "ofdm", "body",
    "vibration", "noise", "outputs", "processing",
}
_PROPELLER_KEYS = {
    "offset_m", "axis", "rpm", "phi0_deg", "n_blades", "blade_length_m", "reflectivity",
}
_OUTPUT_KEYS = {"iq", "symbols", "rdmap", "rdmap_csv", "metrics"}


def validate_scenario_node(root, source: str) -> None:
    """Structural validation of a composed YAML node tree.

    Raises :class:`ScenarioError` with a ``file:line`` anchor on the
    first violation.  Used by both the loader and the dry-run command.
    """
    top = _mapping_items(root, source, "scenario")
    _check_keys(top, _SCENARIO_KEYS, source, root, "scenario")
    for key in ("link", "propellers", "ofdm"):
        if key not in top:
            _fail(root, source, "scenario", f"missing required section {key!r}")

    if "name" in top:
        _get_str(top["name"], source, "name")
    if "seed" in top:
        _get_int(top["seed"], source, "seed")

    link = _mapping_items(top["link"], source, "link")
    _check_keys(link, {"tx_m", "rx_m"}, source, top["link"], "link")
    for key in ("tx_m", "rx_m"):
        if key not in link:
            _fail(top["link"], source, "link", f"missing required key {key!r}")
        _get_vec3(link[key], source, f"link.{key}")

    if "drone" in top:
        drone = _mapping_items(top["drone"], source, "drone")
        _check_keys(drone, {"center_m", "velocity_mps"}, source, top["drone"], "drone")
        for key, node in drone.items():
            _get_vec3(node, source, f"drone.{key}")

    props_node = top["propellers"]
    if not isinstance(props_node, yaml.SequenceNode):
        _fail(props_node, source, "propellers", "expected a list of propellers")
    for idx, item in enumerate(props_node.value):
        path = f"propellers[{idx}]"
        prop = _mapping_items(item, source, path)
        _check_keys(prop, _PROPELLER_KEYS, source, item, path)
        for key in ("axis", "rpm", "blade_length_m"):
            if key not in prop:
                _fail(item, source, path, f"missing required key {key!r}")
        _get_vec3(prop["axis"], source, f"{path}.axis")
        if "offset_m" in prop:
            _get_vec3(prop["offset_m"], source, f"{path}.offset_m")
        rpm = _get_float(prop["rpm"], source, f"{path}.rpm")
        if rpm == 0:
            _fail(prop["rpm"], source, f"{path}.rpm", "rpm must be nonzero")
        length = _get_float(prop["blade_length_m"], source, f"{path}.blade_length_m")
        if length <= 0:
            _fail(prop["blade_length_m"], source, f"{path}.blade_length_m", "must be > 0")
        if "n_blades" in prop and _get_int(prop["n_blades"], source, f"{path}.n_blades") < 1:
            _fail(prop["n_blades"], source, f"{path}.n_blades", "must be >= 1")
        if "phi0_deg" in prop:
            node = prop["phi0_deg"]
            value = _as_scalar(node, source, f"{path}.phi0_deg")
            if not (value == "random" or isinstance(value, (int, float))):
                _fail(node, source, f"{path}.phi0_deg", "expected degrees or 'random'")
        if "reflectivity" in prop:
            _get_complex(prop["reflectivity"], source, f"{path}.reflectivity")

    ofdm = _mapping_items(top["ofdm"], source, "ofdm")
    _check_keys(
        ofdm,
        {"n_subcarriers", "symbol_duration_s", "carrier_freq_hz", "n_symbols",
         "modulation", "seed", "symbols_file"},
        source, top["ofdm"], "ofdm",
    )
    for key in ("n_subcarriers", "symbol_duration_s", "carrier_freq_hz", "n_symbols"):
        if key not in ofdm:
            _fail(top["ofdm"], source, "ofdm", f"missing required key {key!r}")
    for key in ("n_subcarriers", "n_symbols"):
        if _get_int(ofdm[key], source, f"ofdm.{key}") < 1:
            _fail(ofdm[key], source, f"ofdm.{key}", "must be >= 1")
    for key in ("symbol_duration_s", "carrier_freq_hz"):
        if _get_float(ofdm[key], source, f"ofdm.{key}") <= 0:
            _fail(ofdm[key], source, f"ofdm.{key}", "must be > 0")
    if "modulation" in ofdm:
        _get_str(ofdm["modulation"], source, "ofdm.modulation")
    if "seed" in ofdm:
        _get_int(ofdm["seed"], source, "ofdm.seed")
    if "symbols_file" in ofdm:
        _get_str(ofdm["symbols_file"], source, "ofdm.symbols_file")

    if "body" in top:
        body = _mapping_items(top["body"], source, "body")
        _check_keys(
            body,
            {"kind", "gamma_prime", "d_max_m", "s21_file", "s21_library", "aspect"},
            source, top["body"], "body",
        )
        kind = _get_str(body.get("kind", top["body"]), source, "body.kind") if "kind" in body else "none"
        if kind not in ("none", "gaussian", "measurement"):
            _fail(body["kind"], source, "body.kind", f"unknown body kind {kind!r}")
        if kind != "none" and "d_max_m" not in body:
            _fail(top["body"], source, "body", f"kind {kind!r} requires d_max_m")
        if "d_max_m" in body and _get_float(body["d_max_m"], source, "body.d_max_m") <= 0:
            _fail(body["d_max_m"], source, "body.d_max_m", "must be > 0")
        if "gamma_prime" in body:
            _get_complex(body["gamma_prime"], source, "body.gamma_prime")
        if kind == "measurement" and "s21_file" not in body and "s21_library" not in body:
            _fail(top["body"], source, "body", "measurement kind requires s21_file or s21_library")
        if "aspect" in body:
            aspect = _mapping_items(body["aspect"], source, "body.aspect")
            _check_keys(aspect, {"azimuth_deg", "elevation_deg", "beta_deg"},
                        source, body["aspect"], "body.aspect")
            for key, node in aspect.items():
                _get_float(node, source, f"body.aspect.{key}")

    if "vibration" in top:
        vib = _mapping_items(top["vibration"], source, "vibration")
        _check_keys(vib, {"enabled", "d0_m", "seed", "apply_to_propellers"},
                    source, top["vibration"], "vibration")
        if "enabled" in vib:
            _get_bool(vib["enabled"], source, "vibration.enabled")
        if "d0_m" in vib and _get_float(vib["d0_m"], source, "vibration.d0_m") < 0:
            _fail(vib["d0_m"], source, "vibration.d0_m", "must be >= 0")
        if "seed" in vib:
            _get_int(vib["seed"], source, "vibration.seed")
        if "apply_to_propellers" in vib:
            _get_bool(vib["apply_to_propellers"], source, "vibration.apply_to_propellers")

    if "noise" in top:
        noise = _mapping_items(top["noise"], source, "noise")
        _check_keys(noise, {"variance"}, source, top["noise"], "noise")
        if "variance" in noise and _get_float(noise["variance"], source, "noise.variance") < 0:
            _fail(noise["variance"], source, "noise.variance", "must be >= 0")

    if "outputs" in top:
        outputs = _mapping_items(top["outputs"], source, "outputs")
        _check_keys(outputs, _OUTPUT_KEYS, source, top["outputs"], "outputs")
        for key, node in outputs.items():
            _get_str(node, source, f"outputs.{key}")

    if "processing" in top:
        proc = _mapping_items(top["processing"], source, "processing")
        _check_keys(proc, {"window", "subsample"}, source, top["processing"], "processing")
        if "window" in proc:
            _get_str(proc["window"], source, "processing.window")
        if "subsample" in proc and _get_int(proc["subsample"], source, "processing.subsample") < 1:
            _fail(proc["subsample"], source, "processing.subsample", "must be >= 1")


def validate_scenario_text(text: str, source: str = "<scenario>") -> dict:
    """Validate a YAML scenario document and return it as a plain dict."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: not valid YAML: {exc}") from exc
    if root is None:
        raise ScenarioError(f"{source}: empty scenario")
    validate_scenario_node(root, source)
    return yaml.safe_load(text)


def load_scenario(path) -> dict:
    """Load and validate a scenario file (or a ``preset:<name>`` spec)."""
    text_path = str(path)
    if text_path.startswith("preset:"):
        return preset_scenario(text_path.split(":", 1)[1])
    path = Path(path)
    return validate_scenario_text(path.read_text(), source=str(path))


# ---------------------------------------------------------------------------
# presets

def _preset_base(name: str, ofdm: dict) -> dict:
    return {
        "name": name,
        "seed": 1,
        "link": {"tx_m": [-2.0, 0.0, 0.0], "rx_m": [2.0, 0.0, 0.0]},
        "drone": {"center_m": [0.0, 2.2, 0.8], "velocity_mps": [0.0, 0.0, 0.0]},
        "ofdm": ofdm,
        "noise": {"variance": 0.0},
        "propellers": [],
    }


_PRESET_OFDM_HRR = {
    "n_subcarriers": 128,
    "symbol_duration_s": 2.5e-8,   # 5.1 GHz bandwidth, 5.9 cm bins, 7.5 m span
    "carrier_freq_hz": 1.0e10,
    "n_symbols": 256,
    "modulation": "psk4",
}


def _ring_propellers(count: int, radius: float, rpm_base: float) -> list:
    props = []
    for k in range(count):
        angle = TWO_PI * k / count
        props.append({
            "offset_m": [float(radius * np.cos(angle)), float(radius * np.sin(angle)), 0.0],
            # alternate spin directions as on a real multirotor
            "axis": [0.0, 0.0, 1.0 if k % 2 == 0 else -1.0],
            "rpm": rpm_base + 100.0 * k,
            "phi0_deg": "random",
            "n_blades": 2,
            "blade_length_m": 0.127,
        })
    return props


def preset_scenario(name: str) -> dict:
    """Built-in scenarios: ``quadcopter``, ``hexacopter``, ``vtol7``."""
    if name == "quadcopter":
        scenario = _preset_base(name, dict(_PRESET_OFDM_HRR))
        scenario["propellers"] = _ring_propellers(4, 0.18, 1500.0)
    elif name == "hexacopter":
        scenario = _preset_base(name, dict(_PRESET_OFDM_HRR))
        scenario["propellers"] = _ring_propellers(6, 0.25, 1500.0)
    elif name == "vtol7":
        scenario = _preset_base(name, dict(_PRESET_OFDM_HRR))
        props = _ring_propellers(6, 0.30, 1500.0)
        props.append({
            # pusher propeller, axis orthogonal to the six lifters
            "offset_m": [0.0, -0.45, 0.05],
            "axis": [0.0, 1.0, 0.0],
            "rpm": 2200.0,
            "phi0_deg": "random",
            "n_blades": 2,
            "blade_length_m": 0.15,
        })
        scenario["propellers"] = props
    else:
        raise ScenarioError(f"unknown preset {name!r}; have quadcopter, hexacopter, vtol7")
    return scenario


# ---------------------------------------------------------------------------
# config construction and execution

def build_configs(scenario: dict):
    """Turn a validated scenario dict into (DroneConfig, OfdmConfig, options)."""
    seed = int(scenario.get("seed", 0))
    link_sec = scenario["link"]
    drone_sec = scenario.get("drone", {})
    center = np.asarray(drone_sec.get("center_m", [0.0, 0.0, 0.0]), dtype=float)
    velocity = np.asarray(drone_sec.get("velocity_mps", [0.0, 0.0, 0.0]), dtype=float)
    link = BistaticLink(
        tx_pos=link_sec["tx_m"], rx_pos=link_sec["rx_m"], drone_center=center
    )

    props = []
    reflectivities = []
    for item in scenario["propellers"]:
        axis = np.asarray(item["axis"], dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ScenarioError("propeller axis must be a nonzero vector")
        omega_vec = axis / norm * rpm_to_rad_per_s(float(item["rpm"]))
        phi0_raw = item.get("phi0_deg", "random")
        phi0 = None if phi0_raw == "random" else float(np.radians(float(phi0_raw)))
        offset = np.asarray(item.get("offset_m", [0.0, 0.0, 0.0]), dtype=float)
        props.append(PropellerGeometry(
            rotation_center=center + offset,
            omega_vec=omega_vec,
            phi0=phi0,
            n_blades=int(item.get("n_blades", 2)),
            blade_length=float(item["blade_length_m"]),
        ))
        refl = item.get("reflectivity", 1.0)
        reflectivities.append(complex(refl[0], refl[1]) if isinstance(refl, list) else complex(refl))

    body_sec = scenario.get("body", {"kind": "none"})
    kind = body_sec.get("kind", "none")
    profile = None
    if kind == "measurement":
        if "s21_file" in body_sec:
            profile = S21Profile.from_file(body_sec["s21_file"])
        else:
            aspect = body_sec.get("aspect", {})
            profile = select_s21_profile(
                body_sec["s21_library"],
                float(aspect.get("azimuth_deg", 0.0)),
                float(aspect.get("elevation_deg", 0.0)),
                float(aspect.get("beta_deg", 0.0)),
            )
    gamma_raw = body_sec.get("gamma_prime", 1.0)
    body = BodyModelConfig(
        kind=kind,
        gamma_prime=complex(gamma_raw[0], gamma_raw[1]) if isinstance(gamma_raw, list) else complex(gamma_raw),
        d_max=float(body_sec.get("d_max_m", 0.0)),
        s21_profile=profile,
    )

    vib_sec = scenario.get("vibration", {})
    vibration = VibrationConfig(
        d0=float(vib_sec.get("d0_m", 0.0)),
        enabled=bool(vib_sec.get("enabled", False)),
        seed=vib_sec.get("seed"),
        apply_to_propellers=bool(vib_sec.get("apply_to_propellers", False)),
    )

    ofdm_sec = scenario["ofdm"]
    ofdm = OfdmConfig(
        n_subcarriers=int(ofdm_sec["n_subcarriers"]),
        symbol_duration=float(ofdm_sec["symbol_duration_s"]),
        carrier_freq=float(ofdm_sec["carrier_freq_hz"]),
        n_symbols=int(ofdm_sec["n_symbols"]),
        modulation=str(ofdm_sec.get("modulation", "psk4")),
        seed=int(ofdm_sec.get("seed", seed)),
    )

    drone_cfg = DroneConfig(
        link=link,
        propellers=props,
        velocity=velocity,
        reflectivities=reflectivities or None,
        body=body,
        vibration=vibration,
        noise_variance=float(scenario.get("noise", {}).get("variance", 0.0)),
        seed=seed,
    )
    options = {
        "symbols_file": ofdm_sec.get("symbols_file"),
        "outputs": scenario.get("outputs", {}),
        "processing": scenario.get("processing", {}),
        "name": scenario.get("name", "scenario"),
    }
    return drone_cfg, ofdm, options


def _span_warning(drone_cfg: DroneConfig, ofdm: OfdmConfig) -> Optional[str]:
    span = SPEED_OF_LIGHT * ofdm.symbol_duration
    ranges = [
        float(bistatic_range(drone_cfg.link.tx_pos, drone_cfg.link.rx_pos, p.rotation_center))
        for p in drone_cfg.propellers
    ]
    ranges.append(
        float(bistatic_range(drone_cfg.link.tx_pos, drone_cfg.link.rx_pos,
                             drone_cfg.link.drone_center))
    )
    worst = max(ranges)
    if worst > span:
        return (
            f"bistatic range {worst:.2f} m exceeds the unambiguous span c*T = {span:.2f} m; "
            "returns will fall outside the sampled delay window"
        )
    return None


def run_scenario(scenario_or_path, out_dir=None) -> dict:
    """Simulate one scenario and write its artifacts.

    Returns a manifest-style record: parameters plus per-file content
    hashes.  Raises ScenarioError on schema problems; the CLI maps that
    to a nonzero exit.
    """
    if isinstance(scenario_or_path, dict):
        scenario = validate_scenario_text(yaml.safe_dump(scenario_or_path), source="<dict>")
    else:
        scenario = load_scenario(scenario_or_path)
    drone_cfg, ofdm, options = build_configs(scenario)

    warning = _span_warning(drone_cfg, ofdm)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)

    out_dir = Path(out_dir) if out_dir is not None else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)

    if options["symbols_file"]:
        symbols = load_symbols(options["symbols_file"])
        if symbols.shape != (ofdm.n_subcarriers, ofdm.n_symbols):
            raise ScenarioError(
                f"symbols_file grid {symbols.shape} != OFDM grid "
                f"({ofdm.n_subcarriers}, {ofdm.n_symbols})"
            )
    else:
        symbols = generate_symbols(ofdm)

    frame = simulate_drone(drone_cfg, symbols, ofdm)

    name = options["name"]
    outputs = dict(options["outputs"])
    outputs.setdefault("iq", f"{name}.iq")
    written = {}

    iq_path = out_dir / outputs["iq"]
    save_iq(frame, iq_path)
    written["iq"] = file_record(iq_path)

    if "symbols" in outputs:
        sym_path = out_dir / outputs["symbols"]
        save_symbols(symbols, sym_path)
        written["symbols"] = file_record(sym_path)

    proc = options["processing"]
    window = proc.get("window", "hann")
    subsample = int(proc.get("subsample", 1))
    if "rdmap" in outputs or "rdmap_csv" in outputs:
        rdmap = range_doppler(frame, symbols, window=window, subsample=subsample)
        if "rdmap" in outputs:
            rd_path = out_dir / outputs["rdmap"]
            save_rdmap(rdmap, rd_path)
            written["rdmap"] = file_record(rd_path)
        if "rdmap_csv" in outputs:
            csv_path = out_dir / outputs["rdmap_csv"]
            save_rdmap_csv(rdmap, csv_path)
            written["rdmap_csv"] = file_record(csv_path)
    if "metrics" in outputs:
        metrics = extract_metrics(frame, symbols, window=window, subsample=subsample)
        met_path = out_dir / outputs["metrics"]
        save_metrics(metrics, met_path, extra={"scenario": name})
        written["metrics"] = file_record(met_path)

    return {"name": name, "seed": int(scenario.get("seed", 0)), "files": written}

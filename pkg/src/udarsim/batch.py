"""Batch dataset generation: sweep grids, per-item seeds, manifests.

A batch spec names a base scenario and a list of sweeps; the items are
the cartesian product of the sweep values.  Every item gets a scenario
seed derived from (master seed, item index), so the dataset is
reproducible item-by-item no matter how many workers run it or in what
order items complete.  Failures are recorded per item without aborting
the rest of the batch.

Sweep keys are dotted paths into the scenario document
(``ofdm.n_symbols``, ``noise.variance`` ...); the shorthand ``rpm``
applies to every propeller at once.
"""

from __future__ import annotations

import copy
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .scenario import load_scenario, run_scenario


class BatchError(ValueError):
    """Raised for invalid batch specs or sweep expressions."""


def derived_item_seed(master_seed: int, index: int) -> int:
    """Deterministic per-item scenario seed from (master seed, index)."""
    return int(
        np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0]
    )


def parse_sweep(expr: str) -> tuple:
    """Parse ``key=start:stop:step`` (inclusive) or ``key=v1,v2,...``."""
    if "=" not in expr:
        raise BatchError(f"sweep {expr!r} must look like key=start:stop:step or key=v1,v2,...")
    key, spec = expr.split("=", 1)
    key = key.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise BatchError(f"sweep range {spec!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise BatchError("sweep step must be > 0")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(count)]
    else:
        values = [float(p) for p in spec.split(",") if p.strip()]
        if not values:
            raise BatchError(f"sweep {expr!r} has no values")
    return key, values


def apply_override(scenario: dict, key: str, value) -> dict:
    """Return a copy of the scenario with one swept value applied."""
    updated = copy.deepcopy(scenario)
    if key == "rpm":
        for prop in updated["propellers"]:
            prop["rpm"] = value
        return updated
    node = updated
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value
    return updated


def expand_grid(scenario: dict, sweeps: Sequence[tuple]) -> list:
    """Cartesian product of sweep values: list of (params, scenario) pairs."""
    items = [({}, copy.deepcopy(scenario))]
    for key, values in sweeps:
        expanded = []
        for params, item in items:
            for value in values:
                new_params = dict(params)
                new_params[key] = value
                expanded.append((new_params, apply_override(item, key, value)))
        items = expanded
    return items


def _run_item(index: int, scenario: dict, out_root: str, params: dict) -> dict:
    item_dir = Path(out_root) / f"item_{index:04d}"
    try:
        record = run_scenario(scenario, out_dir=item_dir)
        return {
            "index": index,
            "status": "ok",
            "seed": record["seed"],
            "dir": item_dir.name,
            "params": params,
            "files": record["files"],
        }
    except Exception as exc:  # pragma: no cover - exercised via fault injection
        return {
            "index": index,
            "status": "failed",
            "dir": item_dir.name,
            "params": params,
            "error": f"{type(exc).__name__}: {exc}",
        }


def load_batch_spec(path) -> dict:
    spec = yaml.safe_load(Path(path).read_text())
    if not isinstance(spec, dict):
        raise BatchError(f"{path}: batch spec must be a mapping")
    unknown = set(spec) - {"base", "scenario", "master_seed", "sweeps", "out_dir", "workers"}
    if unknown:
        raise BatchError(f"{path}: unknown batch keys {sorted(unknown)}")
    if ("base" in spec) == ("scenario" in spec):
        raise BatchError(f"{path}: exactly one of 'base' (path) or 'scenario' (inline) required")
    return spec


def _parse_spec_sweeps(spec: dict) -> list:
    sweeps = []
    for entry in spec.get("sweeps", []):
        if isinstance(entry, str):
            sweeps.append(parse_sweep(entry))
        elif isinstance(entry, dict) and "key" in entry and "values" in entry:
            sweeps.append((str(entry["key"]), list(entry["values"])))
        elif isinstance(entry, dict) and "key" in entry and "range" in entry:
            sweeps.append(parse_sweep(f"{entry['key']}={entry['range']}"))
        else:
            raise BatchError(f"malformed sweep entry: {entry!r}")
    return sweeps


def batch_generate(spec_or_path, parallelism: Optional[int] = None, out_dir=None) -> dict:
    """Generate a whole dataset and write its manifest.

    ``parallelism`` > 1 runs items in separate processes; results are
    identical either way because items are independently seeded.  The
    manifest (``manifest.json`` in the output directory) records the
    sweep parameters, derived seed and content hashes of every item;
    failed items are listed with their error instead of files.
    """
    if isinstance(spec_or_path, dict):
        spec = dict(spec_or_path)
        spec_dir = Path.cwd()
    else:
        spec = load_batch_spec(spec_or_path)
        spec_dir = Path(spec_or_path).parent

    if "base" in spec:
        base_ref = str(spec["base"])
        base = load_scenario(base_ref if base_ref.startswith("preset:") else spec_dir / base_ref)
    else:
        base = copy.deepcopy(spec["scenario"])

    master_seed = int(spec.get("master_seed", 0))
    sweeps = _parse_spec_sweeps(spec)
    out_root = Path(out_dir if out_dir is not None else spec.get("out_dir", "dataset"))
    out_root.mkdir(parents=True, exist_ok=True)

    jobs = []
    for index, (params, scenario) in enumerate(expand_grid(base, sweeps)):
        scenario["seed"] = derived_item_seed(master_seed, index)
        scenario["name"] = f"{scenario.get('name', 'item')}_{index:04d}"
        jobs.append((index, scenario, str(out_root), params))

    workers = int(parallelism or spec.get("workers", 1) or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_item, *zip(*jobs)))
    else:
        results = [_run_item(*job) for job in jobs]
    results.sort(key=lambda item: item["index"])

    manifest = {
        "master_seed": master_seed,
        "sweeps": [[key, values] for key, values in sweeps],
        "n_items": len(results),
        "n_failed": sum(1 for item in results if item["status"] != "ok"),
        "items": results,
    }
    manifest_path = out_root / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest["manifest_path"] = str(manifest_path)
    return manifest


def verify_manifest(manifest_path) -> list:
    """Re-hash every file referenced by a manifest; return mismatches."""
    from .storage import sha256_of

    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    root = manifest_path.parent
    mismatches = []
    for item in manifest["items"]:
        if item["status"] != "ok":
            continue
        for kind, record in item["files"].items():
            path = root / item["dir"] / record["path"]
            if not path.exists():
                mismatches.append((str(path), "missing"))
            elif sha256_of(path) != record["sha256"]:
                mismatches.append((str(path), "hash mismatch"))
    return mismatches

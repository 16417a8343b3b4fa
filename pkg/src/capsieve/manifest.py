"""Run manifests: the reproducibility record written next to every artifact.

A manifest names the artifact, the exact configuration (and its hash),
the content hashes of every input file, library versions, and timing.
Manifests are the only outputs that contain timestamps; artifacts
themselves are byte-identical across same-seed runs.
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Mapping

_HASH_CHUNK = 1 << 20


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        while True:
            chunk = fh.read(_HASH_CHUNK)
            if not chunk:
                break
            h.update(chunk)
    return h.hexdigest()


def canonical_json(obj) -> str:
    """Stable serialization used for hashing configs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: Mapping) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def _versions() -> dict[str, str]:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "numba", "click", "capsieve"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def write_manifest(
    artifact: str | Path,
    config: Mapping,
    inputs: Mapping[str, str | Path],
    extra: Mapping | None = None,
    wall_time_s: float | None = None,
) -> Path:
    """Write `<artifact>.manifest.json` and return its path."""
    artifact = Path(artifact)
    doc = {
        "artifact": artifact.name,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "argv": sys.argv[1:],
        "config": dict(config),
        "config_hash": config_hash(config),
        "inputs": {
            name: {"path": str(p), "sha256": sha256_file(p)}
            for name, p in sorted(inputs.items())
        },
        "versions": _versions(),
    }
    if wall_time_s is not None:
        doc["wall_time_s"] = round(wall_time_s, 3)
    if extra:
        doc.update(extra)
    out = Path(str(artifact) + ".manifest.json")
    out.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return out

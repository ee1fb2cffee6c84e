"""Run manifests: every artifact-producing command records what made it.

Manifests carry input digests, arguments, seeds and a timestamp so a changed
report can be traced to the input or configuration that changed. The timestamp
makes manifests the one output that is not byte-reproducible; data artifacts
are compared without them.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return None  # non-serializable (e.g. callbacks) are dropped from the audit


def write_manifest(path, command: str, arguments: dict, inputs: dict | None = None,
                   seeds: dict | None = None) -> None:
    """``inputs`` maps a label to an existing file path."""
    obj = {
        "command": command,
        "arguments": {k: _plain(v) for k, v in sorted(arguments.items())
                      if k != "func"},
        "inputs": {name: file_digest(p) for name, p in sorted((inputs or {}).items())
                   if p is not None and Path(p).exists()},
        "rng_seeds": seeds or {},
        "tool_version": __version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")

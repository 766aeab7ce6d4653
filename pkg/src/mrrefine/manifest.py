"""Campaign manifest: provenance carried from stage to stage.

Each artifact ``X`` gets a sidecar ``X.manifest.json``; JSON artifacts also
embed the manifest and its hash. Nothing path- or time-dependent goes in, so
reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Optional, Union

from mrrefine import __version__

SIDECAR_SUFFIX = ".manifest.json"


def canonical(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def manifest_hash(manifest: dict[str, Any]) -> str:
    return hashlib.sha256(canonical(manifest).encode()).hexdigest()


def file_sha256(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def new_manifest() -> dict[str, Any]:
    return {"tool": "mrrefine", "tool_version": __version__, "artifacts": {}}


def sidecar_path(artifact: Union[str, Path]) -> Path:
    p = Path(artifact)
    return p.with_name(p.name + SIDECAR_SUFFIX)


def read_sidecar(artifact: Union[str, Path]) -> Optional[dict[str, Any]]:
    p = sidecar_path(artifact)
    if not p.exists():
        return None
    return json.loads(p.read_text())


def write_sidecar(artifact: Union[str, Path], manifest: dict[str, Any], role: str) -> str:
    """Record ``artifact``'s hash under ``role`` and write its sidecar. Returns the manifest hash."""
    manifest.setdefault("artifacts", {})[role] = file_sha256(artifact)
    sidecar_path(artifact).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_hash(manifest)

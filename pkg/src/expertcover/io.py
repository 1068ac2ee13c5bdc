"""Canonical text formats: ensemble files, run manifests and report records.

An ensemble file is a JSON object ``{"num_classes": K, "classifiers": [[...], ...]}``
with 1-based sorted labels. Emitted files carry the run manifest on a leading
``# manifest: {...}`` comment line; readers skip ``#`` lines.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Any

from . import __version__
from .errors import EnsembleFormatError
from .model import Ensemble

MANIFEST_PREFIX = "# manifest: "


def canonical_json(obj: Any) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return _plain(obj.item())
    return obj


def ensemble_to_dict(ensemble: Ensemble) -> dict:
    return {"num_classes": ensemble.num_classes, "classifiers": ensemble.as_lists()}


def ensemble_digest(ensemble: Ensemble) -> str:
    return hashlib.sha256(canonical_json(ensemble_to_dict(ensemble)).encode()).hexdigest()


def ensemble_from_dict(data: Any) -> Ensemble:
    if not isinstance(data, dict):
        raise EnsembleFormatError("ensemble must be a JSON object")
    missing = {"num_classes", "classifiers"} - data.keys()
    if missing:
        raise EnsembleFormatError(f"ensemble is missing field(s) {sorted(missing)}")
    K = data["num_classes"]
    rows = data["classifiers"]
    if isinstance(K, bool) or not isinstance(K, int):
        raise EnsembleFormatError(f"num_classes must be an integer, got {K!r}")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise EnsembleFormatError("classifiers must be a list of integer lists")
    for r in rows:
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in r):
            raise EnsembleFormatError(f"non-integer label in scope {r}")
        if any(not 1 <= v <= K for v in r):
            raise EnsembleFormatError(f"scope {r} has a label outside 1..{K}")
    return Ensemble(K, tuple(tuple(r) for r in rows))


def parse_ensemble(text: str) -> Ensemble:
    body = "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(f"not valid JSON: {exc}") from exc
    return ensemble_from_dict(data)


def read_manifest(text: str) -> dict | None:
    for line in text.splitlines():
        if line.startswith(MANIFEST_PREFIX):
            return json.loads(line[len(MANIFEST_PREFIX):])
    return None


def load_ensemble(path: str | Path) -> Ensemble:
    return parse_ensemble(Path(path).read_text())


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    seed: int | None = None
    tool_version: str = __version__
    ensemble_digest: str | None = None


def format_ensemble(ensemble: Ensemble, manifest: RunManifest | None = None) -> str:
    lines = []
    if manifest is not None:
        lines.append(MANIFEST_PREFIX + canonical_json(manifest))
    body = ",\n    ".join(json.dumps(s) for s in ensemble.as_lists())
    lines.append('{"num_classes": %d, "classifiers": [\n    %s\n]}' % (ensemble.num_classes, body))
    return "\n".join(lines) + "\n"


def save_ensemble(path: str | Path, ensemble: Ensemble, manifest: RunManifest | None = None) -> None:
    Path(path).write_text(format_ensemble(ensemble, manifest))

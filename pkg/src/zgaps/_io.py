"""Atomic JSON/CSV writers and run manifests."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import metadata

import numpy as np


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None = None
    budget: dict | None = None
    wall_time: float = 0.0
    artifact_version: str = field(default_factory=package_version)
    threads: int = 1

    def as_dict(self) -> dict:
        return asdict(self)


def to_jsonable(obj):
    """Complex numbers become [re, im]; numpy scalars and arrays become Python values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(report: dict) -> str:
    # json writes floats with repr, the shortest string that round-trips
    return json.dumps(to_jsonable(report), indent=2, allow_nan=True) + "\n"


def write_json(path: str, report: dict) -> None:
    atomic_write_text(path, dumps_json(report))


def format_csv(header: list[str], rows, manifest: RunManifest | None = None) -> str:
    lines = []
    if manifest is not None:
        for line in json.dumps(to_jsonable(manifest.as_dict()), sort_keys=True).splitlines():
            lines.append(f"# manifest {line}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(f"{float(v):.12g}" for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: str, header: list[str], rows, manifest: RunManifest | None = None) -> None:
    atomic_write_text(path, format_csv(header, rows, manifest))

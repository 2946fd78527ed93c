"""Reproducibility stamps: every CLI command writes a run manifest beside
its outputs (atomically), recording command, config hash, corpus hash,
seed, version, timing, and output paths."""
from __future__ import annotations

import datetime as dt
import hashlib
import json
import platform
from pathlib import Path

from . import __version__
from ._kernels import BACKEND_NAME

MANIFEST_NAME = "run_manifest.json"
# Fields that vary run to run even with identical inputs; byte-compare
# tooling (and the determinism acceptance check) must ignore them.
VOLATILE_FIELDS = ("started_at", "finished_at", "duration_s")


def corpus_hash(corpus_dir) -> str:
    """sha256 over the corpus directory's JSONL files (sorted by name)."""
    h = hashlib.sha256()
    root = Path(corpus_dir)
    for path in sorted(root.glob("*.jsonl")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(out_dir, command: str, *, config_hash: str | None = None,
                   corpus: str | None = None, seed: int | None = None,
                   outputs=(), started: dt.datetime | None = None,
                   extra: dict | None = None) -> Path:
    now = dt.datetime.now(dt.timezone.utc)
    doc = {
        "command": command,
        "tool_version": __version__,
        "backend": BACKEND_NAME,
        "platform": platform.platform(),
        "config_hash": config_hash,
        "corpus_hash": corpus_hash(corpus) if corpus else None,
        "seed": seed,
        "outputs": sorted(str(o) for o in outputs),
        "started_at": (started or now).isoformat(),
        "finished_at": now.isoformat(),
        "duration_s": (now - started).total_seconds() if started else None,
    }
    if extra:
        doc.update(extra)
    out = Path(out_dir) / MANIFEST_NAME
    tmp = out.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    tmp.replace(out)
    return out


def stable_view(manifest_path) -> dict:
    """Manifest content with the volatile timing fields removed."""
    doc = json.loads(Path(manifest_path).read_text())
    for key in VOLATILE_FIELDS:
        doc.pop(key, None)
    return doc

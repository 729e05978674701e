"""Run output directory: schema-stamped JSON, JSON-lines and CSV files with SHA-256 digests."""
import csv
import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from ..dynamics.lattice import LatticeState

SCHEMA_PREFIX = "info-transition"


def schema_tag(kind: str, version: int = 1) -> str:
    return f"{SCHEMA_PREFIX}/{kind}/{version}"


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, no whitespace, repr floats"""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunStore:
    """Writes the outputs of one run under ``out_dir``.

    Every JSON object gets a ``schema`` field and the ``stamp`` entries (unit
    system, constants version). Digested outputs never contain timestamps;
    the manifest written by :meth:`write_manifest` is the only file that does
    and it is not digested.
    """

    def __init__(self, out_dir: str, stamp: Optional[Dict[str, Any]] = None):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.stamp = dict(stamp or {})
        self.digests: Dict[str, str] = {}
        self.logger = logging.getLogger(__name__)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _stamped(self, obj: Dict[str, Any], kind: str) -> Dict[str, Any]:
        return {**self.stamp, **obj, "schema": schema_tag(kind)}

    def _finish(self, name: str) -> str:
        digest = sha256_file(self.path(name))
        self.digests[name] = digest
        self.logger.debug(f"Wrote {name} ({digest[:12]})")
        return digest

    def write_jsonl(self, name: str, records: Iterable[Dict[str, Any]], kind: str) -> str:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            for record in records:
                fh.write(dumps(self._stamped(record, kind)) + "\n")
        return self._finish(name)

    def write_json(self, name: str, obj: Dict[str, Any], kind: str) -> str:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(self._stamped(obj, kind)) + "\n")
        return self._finish(name)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["schema", *self.stamp.keys(), *header])
        prefix = [schema_tag(Path(name).stem), *self.stamp.values()]
        for row in rows:
            writer.writerow(prefix + ["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(buffer.getvalue())
        return self._finish(name)

    def write_lattice_csv(self, name: str, state: LatticeState) -> str:
        return self.write_csv(name, ["x", "x_prime", "re", "im"], state.iter_rows())

    def write_text(self, name: str, text: str) -> str:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return self._finish(name)

    def write_manifest(self, name: str, manifest: Dict[str, Any]) -> Path:
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({**manifest, "schema": schema_tag("manifest")}, fh, sort_keys=True, indent=2)
            fh.write("\n")
        self.logger.info(f"Manifest written to {path}")
        return path


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_manifest(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)

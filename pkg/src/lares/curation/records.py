"""Dataset records and the deterministic curation manifest."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from lares.complexity import ComplexityReport
from lares.errors import ManifestError

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class ImageRecord:
    """One curated image. ``path`` is relative to the manifest directory."""

    path: str
    width: int
    height: int
    source_tag: str
    report: ComplexityReport

    @property
    def complexity(self) -> float:
        return self.report.complexity

    def as_dict(self) -> dict:
        d = asdict(self)
        d["report"] = self.report.as_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ImageRecord":
        return cls(path=d["path"], width=d["width"], height=d["height"],
                   source_tag=d["source_tag"], report=ComplexityReport(**d["report"]))


@dataclass
class DatasetManifest:
    """Deterministic record of curated images, partitions, and degradations.

    All paths are stored relative to the manifest's own directory, so a rerun
    with the same seed and inputs into a sibling directory is byte-identical.
    """

    seed: int
    selection_config: dict
    records: list[ImageRecord]
    partitions: dict[str, list[str]]
    degradations: list[dict]
    version: int = MANIFEST_VERSION
    root: Path | None = field(default=None, compare=False)

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "seed": self.seed,
            "selection_config": self.selection_config,
            "records": [r.as_dict() for r in self.records],
            "partitions": self.partitions,
            "degradations": self.degradations,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = directory / MANIFEST_NAME
        out.write_text(self.to_json())
        self.root = directory
        return out

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.exists():
            raise ManifestError(f"no manifest at {path}")
        d = json.loads(path.read_text())
        m = cls(seed=d["seed"], selection_config=d["selection_config"],
                records=[ImageRecord.from_dict(r) for r in d["records"]],
                partitions=d["partitions"], degradations=d["degradations"],
                version=d["version"])
        m.root = path.parent
        m.check()
        return m

    def check(self) -> None:
        paths = [r.path for r in self.records]
        if len(set(paths)) != len(paths):
            raise ManifestError("duplicate record paths")
        in_parts = [p for part in self.partitions.values() for p in part]
        if sorted(in_parts) != sorted(paths):
            raise ManifestError("partitions must be disjoint and cover every record")

    def resolve(self, rel: str) -> Path:
        if self.root is None:
            raise ManifestError("manifest has no directory; save or load it first")
        return (self.root / rel).resolve()

    def partition_records(self, name: str) -> list[ImageRecord]:
        by_path = {r.path: r for r in self.records}
        try:
            return [by_path[p] for p in self.partitions[name]]
        except KeyError as e:
            raise ManifestError(f"unknown partition or record: {e}") from e

    def degraded_path(self, record_path: str, kind: str, param) -> str:
        for d in self.degradations:
            if d["source"] == record_path and d["kind"] == kind and d["param"] == param:
                return d["output"]
        raise ManifestError(f"no {kind}({param}) degradation for {record_path}")

    def pairs(self, partition: str, kind: str, param) -> list[tuple[Path, Path]]:
        """(clean_path, degraded_path) tuples for one partition."""
        out = []
        for rec in self.partition_records(partition):
            out.append((self.resolve(rec.path),
                        self.resolve(self.degraded_path(rec.path, kind, param))))
        return out

"""
RPTM Dataset Manifest
Labeled image list; index i is the canonical image index everywhere.
"""

import csv
import hashlib
import io
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np

from ..errors import IoError, ManifestError

HEADER = ("path", "id")


@dataclass(frozen=True)
class ManifestEntry:
    """One labeled image"""
    path: str
    id: str


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered (path, id) entries; relative paths resolve against root"""
    entries: Tuple[ManifestEntry, ...]
    root: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "root", Path(self.root))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]],
                   root: Union[str, Path] = ".") -> "DatasetManifest":
        return cls(tuple(ManifestEntry(str(p), str(i)) for p, i in pairs), Path(root))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DatasetManifest":
        """Read a UTF-8 'path,id' CSV"""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise IoError(f"cannot read manifest {path}: {e.strerror or e}") from e

        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(c.strip() for c in rows[0]) != HEADER:
            raise ManifestError(f"{path}: header must be 'path,id'")
        entries = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0] or not row[1]:
                raise ManifestError(f"{path}:{lineno}: expected 'path,id'")
            entries.append(ManifestEntry(row[0], row[1]))
        return cls(tuple(entries), path.parent)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        try:
            path.write_text(self.to_csv(), encoding="utf-8")
        except OSError as e:
            raise IoError(f"cannot write manifest {path}: {e.strerror or e}") from e

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(HEADER)
        for entry in self.entries:
            writer.writerow((entry.path, entry.id))
        return out.getvalue()

    def content_hash(self) -> int:
        """64-bit hash of the canonical CSV text"""
        digest = hashlib.blake2b(self.to_csv().encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, index: int) -> Path:
        path = Path(self.entries[index].path)
        return path if path.is_absolute() else self.root / path

    @property
    def ids(self) -> List[str]:
        return [e.id for e in self.entries]

    def id_groups(self) -> "OrderedDict[str, List[int]]":
        """Image indices per id, in first-appearance order"""
        groups: "OrderedDict[str, List[int]]" = OrderedDict()
        for i, entry in enumerate(self.entries):
            groups.setdefault(entry.id, []).append(i)
        return groups

    def class_labels(self) -> Tuple[np.ndarray, List[str]]:
        """Integer class per image (ids sorted) and the class names"""
        names = sorted(set(self.ids))
        lookup = {name: c for c, name in enumerate(names)}
        return np.array([lookup[e.id] for e in self.entries], dtype=np.intp), names

    def validate(self, min_per_id: int = 2) -> None:
        """Unique paths and at least min_per_id images per id"""
        if not self.entries:
            raise ManifestError("manifest is empty")
        dupes = [p for p, n in Counter(e.path for e in self.entries).items() if n > 1]
        if dupes:
            raise ManifestError(f"duplicate path in manifest: {dupes[0]}")
        for ident, members in self.id_groups().items():
            if len(members) < min_per_id:
                raise ManifestError(
                    f"id {ident!r} has {len(members)} image(s), need at least {min_per_id}"
                )

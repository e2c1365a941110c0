"""
Region feature files and dataset directories.

Region feature file layout (little-endian):

    offset  size  field
    0       4     magic  b"XLRF"
    4       4     version (uint32, currently 1)
    8       4     N regions (uint32)
    12      4     feature dim (uint32)
    16      N·dim·4  payload, row-major float32

The sidecar manifest is plain text, one ``image_id<TAB>relative path`` per
line. A dataset directory holds one manifest and one captions table per split
plus a ``features/`` folder:

    <root>/features/<image_id>.xlrf
    <root>/<split>_manifest.txt
    <root>/<split>_captions.tsv     (columns: image_id, caption)
"""

import os
import struct
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

from .dataset import CaptionExample
from .errors import FileFormatError


MAGIC = b"XLRF"
VERSION = 1
HEADER = struct.Struct("<4sIII")
PAYLOAD_DTYPE = np.dtype("<f4")
SPLITS = ("train", "val", "test")

PathLike = Union[str, Path]


# ============================================================================
# Region feature files
# ============================================================================

def write_region_features(path: PathLike, regions: np.ndarray) -> None:
    """Write an (N, dim) array as a region feature file."""
    regions = np.asarray(regions)
    if regions.ndim != 2 or 0 in regions.shape:
        raise FileFormatError("region features must be a non-empty (N, dim) array", expected="(N, dim)", found=regions.shape)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = regions.astype(PAYLOAD_DTYPE).tobytes(order="C")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, regions.shape[0], regions.shape[1]))
        fh.write(payload)
    os.replace(tmp, path)


def read_region_features(path: PathLike) -> np.ndarray:
    """
    Read a region feature file into a float64 (N, dim) array.

    Raises:
        FileFormatError: On wrong magic, unsupported version or a payload
            whose length is not N × dim × 4 bytes
    """
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FileFormatError("region feature header truncated", path, expected=HEADER.size, found=len(raw))
    magic, version, count, dim = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FileFormatError("bad region feature magic", path, expected=MAGIC, found=magic)
    if version != VERSION:
        raise FileFormatError("unsupported region feature version", path, expected=VERSION, found=version)
    expected = count * dim * PAYLOAD_DTYPE.itemsize
    payload = raw[HEADER.size:]
    if len(payload) != expected or count == 0 or dim == 0:
        raise FileFormatError("region feature payload length", path, expected=expected, found=len(payload))
    return np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(count, dim).astype(np.float64)


# ============================================================================
# Manifests
# ============================================================================

def write_manifest(path: PathLike, entries: Dict[str, str]) -> None:
    lines = [f"{image_id}\t{rel}" for image_id, rel in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: PathLike) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FileFormatError(f"manifest line {number} is not 'image_id<TAB>path'", path, expected=2, found=len(parts))
        entries[parts[0]] = parts[1]
    return entries


# ============================================================================
# Dataset directories
# ============================================================================

def save_dataset(root: PathLike, splits: Dict[str, List[CaptionExample]]) -> None:
    """Write every split of ``splits`` under ``root``."""
    root = Path(root)
    for split, examples in splits.items():
        entries = {}
        for ex in examples:
            rel = f"features/{ex.example_id}.xlrf"
            write_region_features(root / rel, ex.regions)
            entries[ex.example_id] = rel
        write_manifest(root / f"{split}_manifest.txt", entries)
        table = pd.DataFrame({
            "image_id": [ex.example_id for ex in examples],
            "caption": [" ".join(ex.caption) for ex in examples],
        })
        table.to_csv(root / f"{split}_captions.tsv", sep="\t", index=False)


def load_split(root: PathLike, split: str) -> List[CaptionExample]:
    """
    Load one split written by ``save_dataset``.

    Raises:
        FileFormatError: If a captioned image has no manifest entry
    """
    root = Path(root)
    manifest = read_manifest(root / f"{split}_manifest.txt")
    table = pd.read_csv(root / f"{split}_captions.tsv", sep="\t", dtype=str, keep_default_na=False)
    examples = []
    for image_id, caption in zip(table["image_id"], table["caption"]):
        if image_id not in manifest:
            raise FileFormatError("captioned image missing from manifest", root / f"{split}_manifest.txt", found=image_id)
        regions = read_region_features(root / manifest[image_id])
        examples.append(CaptionExample(image_id, regions, caption.split()))
    return examples


def load_dataset(root: PathLike) -> Dict[str, List[CaptionExample]]:
    return {split: load_split(root, split) for split in SPLITS if (Path(root) / f"{split}_manifest.txt").exists()}

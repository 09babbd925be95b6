"""Cell-partitioned key store with provable per-cell score ceilings.

Keys are grouped into cells, each carrying a center and the exact maximum
member distance from it.  Cauchy-Schwarz then caps every member's scaled
dot product with a query by (q . center + ||q|| * radius) / sqrt(d), which
is what lets the certified searches skip whole cells.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KeyStore",
    "CellIndex",
    "build_index",
    "cell_upper_bound",
    "all_upper_bounds",
    "score_cell",
    "score_keys",
    "save_index",
    "load_index",
]


@dataclass(frozen=True)
class KeyStore:
    """Key vectors, one row per key; scores are scaled by 1/sqrt(d)."""

    keys: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.keys, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] < 1 or k.shape[1] < 1:
            raise ValueError(f"keys must be a non-empty 2-D array, got shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("keys must be finite")
        object.__setattr__(self, "keys", k)

    @property
    def n(self) -> int:
        return self.keys.shape[0]

    @property
    def d(self) -> int:
        return self.keys.shape[1]


@dataclass(frozen=True)
class CellIndex:
    """Immutable ball cover of a key store: centers, exact radii, members."""

    store: KeyStore
    centers: np.ndarray
    radii: np.ndarray
    members: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = sum(m.size for m in self.members)
        if sizes != self.store.n:
            raise ValueError("cells do not cover every key exactly once")
        for j, m in enumerate(self.members):
            d = np.linalg.norm(self.store.keys[m] - self.centers[j], axis=1)
            if np.any(d > self.radii[j] + 1e-12 * (1.0 + self.radii[j])):
                raise ValueError(f"cell {j} radius does not contain all members")

    @property
    def num_cells(self) -> int:
        return len(self.members)

    def cell_size(self, j: int) -> int:
        return self.members[j].size


def _kmeans_cells(keys: np.ndarray, num_cells: int, seed: int,
                  iterations: int = 25) -> np.ndarray:
    """Seeded Lloyd iterations; returns the final assignment vector."""
    n = keys.shape[0]
    rng = np.random.default_rng(seed)
    centers = keys[rng.choice(n, size=num_cells, replace=False)].copy()
    sq = np.sum(keys ** 2, axis=1)
    assign = np.zeros(n, dtype=np.intp)
    for _ in range(iterations):
        d2 = sq[:, None] - 2.0 * keys @ centers.T + np.sum(centers ** 2, axis=1)
        new_assign = np.argmin(d2, axis=1)
        for j in range(num_cells):
            mask = new_assign == j
            if np.any(mask):
                centers[j] = keys[mask].mean(axis=0)
            else:
                # revive an empty cell at the point farthest from its center
                far = int(np.argmax(np.min(d2, axis=1)))
                centers[j] = keys[far]
                new_assign[far] = j
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign
    return assign


def build_index(store: KeyStore, num_cells: int, seed: int = 0,
                method: str = "kmeans") -> CellIndex:
    """Partition the store into cells and take exact enclosing radii.

    ``kmeans`` runs a seeded, iteration-capped Lloyd clustering; ``chunks``
    slices the keys into consecutive runs (a reproducible baseline).  Empty
    clusters are dropped, so the result may have fewer cells than asked.
    Radii are true maxima, never estimates: the score ceilings must hold.
    """
    if not 1 <= num_cells <= store.n:
        raise ValueError(f"num_cells={num_cells} out of range [1, {store.n}]")
    if method == "kmeans":
        assign = _kmeans_cells(store.keys, num_cells, seed)
        members = [np.flatnonzero(assign == j) for j in range(num_cells)]
        members = [m for m in members if m.size]
    elif method == "chunks":
        members = list(np.array_split(np.arange(store.n), num_cells))
    else:
        raise ValueError(f"unknown method {method!r}")
    centers = np.stack([store.keys[m].mean(axis=0) for m in members])
    radii = np.array([
        float(np.linalg.norm(store.keys[m] - centers[j], axis=1).max())
        for j, m in enumerate(members)
    ])
    return CellIndex(store=store, centers=centers, radii=radii,
                     members=tuple(members))


def cell_upper_bound(index: CellIndex, j: int, q: np.ndarray) -> float:
    """Ceiling on the scaled score of every key in cell j."""
    _check_cell(index, j)
    q = np.asarray(q, dtype=np.float64)
    scale = np.sqrt(index.store.d)
    return float((q @ index.centers[j] + np.linalg.norm(q) * index.radii[j]) / scale)


def all_upper_bounds(index: CellIndex, q: np.ndarray) -> np.ndarray:
    """Score ceilings for every cell at once."""
    q = np.asarray(q, dtype=np.float64)
    scale = np.sqrt(index.store.d)
    return (index.centers @ q + np.linalg.norm(q) * index.radii) / scale


def score_cell(index: CellIndex, j: int, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact scaled scores for every member of cell j: (ids, scores)."""
    _check_cell(index, j)
    ids = index.members[j]
    return ids, score_keys(index.store, ids, q)


def score_keys(store: KeyStore, ids: np.ndarray, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return store.keys[ids] @ q / np.sqrt(store.d)


def _check_cell(index: CellIndex, j: int) -> None:
    if not 0 <= j < index.num_cells:
        raise ValueError(f"cell id {j} out of range [0, {index.num_cells - 1}]")


# ---------------------------------------------------------------------------
# Versioned binary persistence (little-endian, 64-bit floats)
# ---------------------------------------------------------------------------

_MAGIC = b"TKCELLIX"
_VERSION = 1


def save_index(index: CellIndex, path) -> None:
    """Write the whole index (keys included) to a versioned binary file."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, index.store.n, index.store.d))
        fh.write(struct.pack("<I", index.num_cells))
        fh.write(index.store.keys.astype("<f8").tobytes())
        for j in range(index.num_cells):
            m = index.members[j]
            fh.write(struct.pack("<I", m.size))
            fh.write(index.centers[j].astype("<f8").tobytes())
            fh.write(struct.pack("<d", float(index.radii[j])))
            fh.write(m.astype("<i8").tobytes())


def load_index(path) -> CellIndex:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"not a cell index file (magic {magic!r})")
        version, n, d = struct.unpack("<III", fh.read(12))
        if version != _VERSION:
            raise ValueError(f"unsupported index version {version}")
        (num_cells,) = struct.unpack("<I", fh.read(4))
        keys = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d)
        centers = np.empty((num_cells, d))
        radii = np.empty(num_cells)
        members = []
        for j in range(num_cells):
            (count,) = struct.unpack("<I", fh.read(4))
            centers[j] = np.frombuffer(fh.read(8 * d), dtype="<f8")
            (radii[j],) = struct.unpack("<d", fh.read(8))
            members.append(np.frombuffer(fh.read(8 * count), dtype="<i8").astype(np.intp))
    store = KeyStore(keys.copy())
    return CellIndex(store=store, centers=centers, radii=radii, members=tuple(members))

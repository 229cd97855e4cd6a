"""k-nearest-neighbour index over L2-normalized embedding vectors.

Two backends behind one contract: an exact scan, and a pruned inverted-list
backend that partitions entries by spherical k-means and probes only the
nearest clusters at query time. Scores are cosine similarities throughout
(higher is better); ties break by ascending tile key so results are
reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embedding import as_vector, l2_normalize
from .errors import (
    DimensionError,
    DuplicateKeyError,
    FormatError,
    InputError,
    VersionError,
)
from .geo import Season, TileId, TileKey

MAGIC = b"GQIX"
FORMAT_VERSION = 1
KMEANS_SEED = 715_517
KMEANS_MAX_ITERS = 25
KMEANS_TRAIN_CAP = 100_000

KEY_DTYPE = np.dtype([("col", "<u4"), ("row", "<u4"), ("season", "u1")])

BACKEND_EXACT = "exact"
BACKEND_PRUNED = "pruned_clusters"
_BACKEND_CODES = {BACKEND_EXACT: 0, BACKEND_PRUNED: 1}
_BACKEND_NAMES = {v: k for k, v in _BACKEND_CODES.items()}


@dataclass(frozen=True)
class IndexEntry:
    key: TileKey
    vector: np.ndarray


@dataclass(frozen=True)
class Neighbour:
    key: TileKey
    score: float


@dataclass(frozen=True)
class IndexParams:
    """Backend selection; cluster counts default to sqrt heuristics at build time."""

    backend: str = BACKEND_EXACT
    n_clusters: int | None = None
    n_probe: int | None = None

    def __post_init__(self):
        if self.backend not in _BACKEND_CODES:
            raise InputError(f"unknown backend {self.backend!r}")
        if self.n_clusters is not None and self.n_clusters <= 0:
            raise InputError("n_clusters must be positive")
        if self.n_probe is not None:
            if self.n_probe <= 0:
                raise InputError("n_probe must be positive")
            if self.n_clusters is not None and self.n_probe > self.n_clusters:
                raise InputError("n_probe must not exceed n_clusters")


def keys_to_struct(keys: Sequence[TileKey]) -> np.ndarray:
    out = np.empty(len(keys), dtype=KEY_DTYPE)
    for i, k in enumerate(keys):
        out[i] = (k.tile.col, k.tile.row, k.season.index)
    return out


def struct_to_key(rec) -> TileKey:
    return TileKey(TileId(int(rec["col"]), int(rec["row"])), Season.from_index(int(rec["season"])))


def _spherical_kmeans(matrix: np.ndarray, n_clusters: int, seed: int = KMEANS_SEED):
    """k-means on unit vectors by cosine; returns (centroids, assignments)."""
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)
    train = matrix
    if n > KMEANS_TRAIN_CAP:
        train = matrix[rng.choice(n, KMEANS_TRAIN_CAP, replace=False)]
    centroids = train[rng.choice(train.shape[0], n_clusters, replace=False)].copy()
    assign = None
    for _ in range(KMEANS_MAX_ITERS):
        sims = train @ centroids.T
        new_assign = np.argmax(sims, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(n_clusters):
            members = train[assign == c]
            if members.shape[0] == 0:
                centroids[c] = train[rng.integers(train.shape[0])]
                continue
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            centroids[c] = mean / norm if norm > 0 else centroids[c]
    # Assign the full matrix in chunks (train may have been a sample).
    full_assign = np.empty(n, dtype=np.uint32)
    chunk = 200_000
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        full_assign[lo:hi] = np.argmax(matrix[lo:hi] @ centroids.T, axis=1)
    return centroids, full_assign


class Index:
    """Immutable kNN index; construct via build() or from_arrays()."""

    def __init__(self, keys: np.ndarray, matrix: np.ndarray, params: IndexParams,
                 centroids: np.ndarray | None = None, assignments: np.ndarray | None = None):
        self._keys = keys
        self._matrix = matrix  # float32, rows unit-norm
        self._params = params
        # Rank of each entry under (col, row, season) ascending; the tie-break order.
        self._keyrank = np.empty(len(keys), dtype=np.int64)
        order = np.lexsort((keys["season"], keys["row"], keys["col"]))
        self._keyrank[order] = np.arange(len(keys))
        self._lookup: dict | None = None
        self._matrix64: np.ndarray | None = None
        if params.backend == BACKEND_PRUNED:
            # Entries arrive grouped by cluster (from_arrays/load guarantee it),
            # so each cluster is a contiguous row span of the matrix.
            self._centroids = centroids
            self._assign = assignments
            counts = np.bincount(assignments, minlength=centroids.shape[0])
            self._cluster_offsets = np.concatenate(([0], np.cumsum(counts)))
            # Angular radius per cluster: the pruning bound for cluster c is
            # cos(max(0, angle(q, centroid_c) - radius_c)), an upper bound on
            # any member's cosine against q.
            member_sims = np.einsum(
                "ij,ij->i", matrix.astype(np.float64),
                centroids.astype(np.float64)[assignments],
            )
            angles = np.arccos(np.clip(member_sims, -1.0, 1.0))
            self._radius = np.zeros(centroids.shape[0])
            np.maximum.at(self._radius, assignments, angles)
        else:
            self._matrix64 = matrix.astype(np.float64)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_arrays(cls, keys: np.ndarray, matrix: np.ndarray,
                    params: IndexParams = IndexParams()) -> "Index":
        if keys.dtype != KEY_DTYPE:
            keys = keys.astype(KEY_DTYPE)
        n = len(keys)
        if n == 0:
            raise InputError("cannot build an empty index")
        if matrix.ndim != 2 or matrix.shape[0] != n:
            raise DimensionError("matrix shape does not match key count")
        if len(np.unique(keys)) != n:
            raise DuplicateKeyError("duplicate tile keys in index build")
        norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
        if np.any(norms == 0):
            raise InputError("zero vector in index build")
        matrix = (matrix.astype(np.float64) / norms[:, None]).astype(np.float32)
        centroids = assignments = None
        if params.backend == BACKEND_PRUNED:
            n_clusters = params.n_clusters or int(np.ceil(np.sqrt(n)))
            n_clusters = min(n_clusters, n)
            n_probe = params.n_probe or int(np.ceil(np.sqrt(n_clusters)))
            n_probe = min(n_probe, n_clusters)
            params = IndexParams(BACKEND_PRUNED, n_clusters, n_probe)
            centroids, assignments = _spherical_kmeans(matrix, n_clusters)
            order = np.argsort(assignments, kind="stable")
            keys = keys[order]
            matrix = matrix[order]
            assignments = assignments[order]
        return cls(keys, matrix, params, centroids, assignments)

    def __len__(self) -> int:
        return len(self._keys)

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def params(self) -> IndexParams:
        return self._params

    @property
    def keys_struct(self) -> np.ndarray:
        return self._keys

    def keys(self) -> list[TileKey]:
        return [struct_to_key(rec) for rec in self._keys]

    def _key_lookup(self) -> dict:
        if self._lookup is None:
            self._lookup = {
                (int(r["col"]), int(r["row"]), int(r["season"])): i
                for i, r in enumerate(self._keys)
            }
        return self._lookup

    def position_of(self, key: TileKey) -> int | None:
        return self._key_lookup().get((key.tile.col, key.tile.row, key.season.index))

    def get_vector(self, key: TileKey) -> np.ndarray | None:
        pos = self.position_of(key)
        return None if pos is None else self._matrix[pos]

    # -- search ------------------------------------------------------------

    def _top_from(self, scores: np.ndarray, positions: np.ndarray, k: int) -> list[Neighbour]:
        k = min(k, len(positions))
        if len(positions) > 4 * k:
            # Keep every entry tied with the k-th score so tie-breaks stay exact.
            top = np.argpartition(-scores, k - 1)[:k]
            kth = scores[top].min()
            keep = np.flatnonzero(scores >= kth)
            scores, positions = scores[keep], positions[keep]
        order = np.lexsort((self._keyrank[positions], -scores))[:k]
        return [
            Neighbour(struct_to_key(self._keys[positions[i]]), float(scores[i]))
            for i in order
        ]

    def knn(self, query: np.ndarray, k: int) -> list[Neighbour]:
        if k <= 0:
            raise InputError("k must be positive")
        q = as_vector(query)
        if q.size != self.dim:
            raise DimensionError(f"query dim {q.size} != index dim {self.dim}")
        q = l2_normalize(q).astype(np.float64)
        if self._params.backend == BACKEND_EXACT:
            scores = np.clip(self._matrix64 @ q, -1.0, 1.0)
            return self._top_from(scores, np.arange(len(self._keys)), k)
        return self._pruned_knn(q, k)

    def _pruned_knn(self, q: np.ndarray, k: int) -> list[Neighbour]:
        """Scan clusters in decreasing upper-bound order; stop once no unscanned
        cluster can beat the current k-th best. Bounds keep the result exact up
        to float32 scoring."""
        n = len(self._keys)
        q32 = q.astype(np.float32)
        centroid_sims = self._centroids.astype(np.float64) @ q
        theta = np.arccos(np.clip(centroid_sims, -1.0, 1.0))
        ub = np.cos(np.maximum(0.0, theta - self._radius))
        order = np.argsort(-ub, kind="stable")
        offsets = self._cluster_offsets
        n_probe = self._params.n_probe

        pos_chunks: list[np.ndarray] = []
        score_chunks: list[np.ndarray] = []
        top_buf = np.empty(0, dtype=np.float64)
        kth = -np.inf
        count = 0

        def scan(cluster: int):
            nonlocal count, kth, top_buf
            lo, hi = int(offsets[cluster]), int(offsets[cluster + 1])
            if lo == hi:
                return
            s = (self._matrix[lo:hi] @ q32).astype(np.float64)
            pos_chunks.append(np.arange(lo, hi))
            score_chunks.append(s)
            count += hi - lo
            top = s if s.size <= k else -np.partition(-s, k - 1)[:k]
            top_buf = np.concatenate((top_buf, top))
            if top_buf.size > k:
                top_buf = -np.partition(-top_buf, k - 1)[:k]
            if count >= k:
                kth = top_buf.min()

        scanned = 0
        for rank, cluster in enumerate(order):
            if rank >= n_probe and count >= k and ub[cluster] <= kth + 1e-9:
                break
            if rank == n_probe and count >= k:
                # If pruning is not biting, one full-matrix pass beats
                # thousands of per-cluster passes.
                remaining = order[rank:]
                live = remaining[ub[remaining] > kth + 1e-9]
                live_count = (offsets[live + 1] - offsets[live]).sum()
                if live_count > 0.4 * n:
                    scores = np.clip(
                        (self._matrix @ q32).astype(np.float64), -1.0, 1.0
                    )
                    return self._top_from(scores, np.arange(n), k)
            scan(int(cluster))
        if count == 0:
            return []
        positions = np.concatenate(pos_chunks)
        scores = np.clip(np.concatenate(score_chunks), -1.0, 1.0)
        return self._top_from(scores, positions, k)

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        n, d = self._matrix.shape
        code = _BACKEND_CODES[self._params.backend]
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<IBIQ", FORMAT_VERSION, code, d, n))
            f.write(self._keys.tobytes())
            f.write(self._matrix.astype("<f4").tobytes())
            if self._params.backend == BACKEND_PRUNED:
                f.write(struct.pack("<II", self._params.n_clusters, self._params.n_probe))
                f.write(self._centroids.astype("<f4").tobytes())
                f.write(self._assign.astype("<u4").tobytes())

    @classmethod
    def load(cls, path) -> "Index":
        with open(path, "rb") as f:
            data = f.read()
        if len(data) < 4 or data[:4] != MAGIC:
            raise FormatError("bad magic bytes", offset=0)
        header_size = 4 + struct.calcsize("<IBIQ")
        if len(data) < header_size:
            raise FormatError("truncated header", offset=len(data))
        version, code, dim, count = struct.unpack_from("<IBIQ", data, 4)
        if version != FORMAT_VERSION:
            raise VersionError(f"unsupported index format version {version}")
        if code not in _BACKEND_NAMES:
            raise FormatError(f"unknown backend code {code}", offset=4)
        off = header_size
        keys_bytes = count * KEY_DTYPE.itemsize
        mat_bytes = count * dim * 4
        if len(data) < off + keys_bytes + mat_bytes:
            raise FormatError("payload shorter than header count", offset=len(data))
        keys = np.frombuffer(data[off : off + keys_bytes], dtype=KEY_DTYPE).copy()
        off += keys_bytes
        matrix = (
            np.frombuffer(data[off : off + mat_bytes], dtype="<f4")
            .reshape(count, dim)
            .copy()
        )
        off += mat_bytes
        backend = _BACKEND_NAMES[code]
        if backend == BACKEND_EXACT:
            if len(data) != off:
                raise FormatError("trailing bytes after payload", offset=off)
            return cls(keys, matrix, IndexParams(BACKEND_EXACT))
        if len(data) < off + 8:
            raise FormatError("truncated cluster parameters", offset=len(data))
        n_clusters, n_probe = struct.unpack_from("<II", data, off)
        off += 8
        cent_bytes = n_clusters * dim * 4
        assign_bytes = count * 4
        if len(data) != off + cent_bytes + assign_bytes:
            raise FormatError("cluster payload length mismatch", offset=len(data))
        centroids = (
            np.frombuffer(data[off : off + cent_bytes], dtype="<f4")
            .reshape(n_clusters, dim)
            .copy()
        )
        off += cent_bytes
        assignments = np.frombuffer(data[off:], dtype="<u4").copy()
        return cls(keys, matrix, IndexParams(BACKEND_PRUNED, n_clusters, n_probe),
                   centroids, assignments)


def build(entries: Iterable[IndexEntry], params: IndexParams = IndexParams()) -> Index:
    """Build an index from per-entry records; vectors are normalized on ingest."""
    entries = list(entries)
    if not entries:
        raise InputError("cannot build an empty index")
    dim = as_vector(entries[0].vector).size
    matrix = np.empty((len(entries), dim), dtype=np.float32)
    for i, e in enumerate(entries):
        v = as_vector(e.vector)
        if v.size != dim:
            raise DimensionError(f"entry {i} has dim {v.size}, expected {dim}")
        matrix[i] = v
    keys = keys_to_struct([e.key for e in entries])
    return Index.from_arrays(keys, matrix, params)

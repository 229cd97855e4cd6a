"""Indirect text-visual alignment scoring.

The objective: over a sample of tile pairs, rank-correlate cosine distances
in text-embedding space with cosine distances in visual-embedding space.
A prompt candidate that describes tiles so that textual closeness tracks
visual closeness scores high; candidates are ranked by that correlation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import DescribeOracle, describe_and_embed
from .embedding import ProviderConfig, as_vector, cosine_similarity
from .errors import AllCandidatesFailed, DegenerateInputError, DimensionError, InputError
from .geo import TileKey

DEFAULT_PAIRS_PER_ITEM = 50


@dataclass(frozen=True)
class PairSample:
    """Unordered index pairs drawn from a shared key list."""

    pairs: tuple[tuple[int, int], ...]
    seed: int = 0

    def __post_init__(self):
        seen = set()
        for i, j in self.pairs:
            if i == j:
                raise InputError(f"degenerate pair ({i}, {i})")
            canon = (min(i, j), max(i, j))
            if canon in seen:
                raise InputError(f"duplicate pair {canon}")
            seen.add(canon)

    def validate_against(self, n: int) -> None:
        for i, j in self.pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"pair ordinal out of range for list of {n}")


def make_pair_sample(n: int, n_pairs: int | None = None, seed: int = 0) -> PairSample:
    """Uniform unordered pairs without replacement; defaults to 50 per item."""
    if n < 2:
        raise InputError("need at least two items to form pairs")
    max_pairs = n * (n - 1) // 2
    if n_pairs is None:
        n_pairs = min(DEFAULT_PAIRS_PER_ITEM * n, max_pairs)
    if not (0 < n_pairs <= max_pairs):
        raise InputError(f"n_pairs must be in [1, {max_pairs}]")
    rng = np.random.default_rng(seed)
    if n_pairs == max_pairs:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        chosen: set[tuple[int, int]] = set()
        while len(chosen) < n_pairs:
            need = n_pairs - len(chosen)
            a = rng.integers(0, n, size=2 * need + 8)
            b = rng.integers(0, n, size=2 * need + 8)
            for i, j in zip(a, b):
                if i == j:
                    continue
                chosen.add((min(int(i), int(j)), max(int(i), int(j))))
                if len(chosen) >= n_pairs:
                    break
        pairs = sorted(chosen)
    return PairSample(tuple(pairs), seed=seed)


@dataclass(frozen=True)
class AlignmentScore:
    rho: float
    n_pairs: int

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise InputError("rho must lie in [-1, 1]")
        if self.n_pairs <= 0:
            raise InputError("n_pairs must be positive")


@dataclass(frozen=True)
class PromptCandidate:
    id: str
    prompt_text: str

    def __post_init__(self):
        if not self.id or not self.prompt_text:
            raise InputError("candidate id and prompt text must be non-empty")


def pairwise_distances(vectors: Sequence[np.ndarray], sample: PairSample) -> list[float]:
    """Cosine distance (1 - similarity) per sampled pair, in sample order."""
    vecs = [as_vector(v) for v in vectors]
    dims = {v.size for v in vecs}
    if len(dims) > 1:
        raise DimensionError(f"mixed dims in vector list: {sorted(dims)}")
    sample.validate_against(len(vecs))
    return [1.0 - cosine_similarity(vecs[i], vecs[j]) for i, j in sample.pairs]


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho with average ranks for ties."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise InputError("inputs must be equal-length 1-d sequences")
    if xa.size < 3:
        raise InputError("need at least 3 observations")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise InputError("inputs must be finite")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateInputError("rank correlation undefined for constant input")
    rx = rankdata(xa, method="average")
    ry = rankdata(ya, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    rho = float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))
    return float(np.clip(rho, -1.0, 1.0))


def alignment_score(
    text_vecs: Sequence[np.ndarray],
    visual_vecs: Sequence[np.ndarray],
    sample: PairSample,
) -> AlignmentScore:
    """Rank correlation between text-space and visual-space pair distances."""
    if len(text_vecs) != len(visual_vecs):
        raise InputError("text and visual vector lists must have equal length")
    dt = pairwise_distances(text_vecs, sample)
    dv = pairwise_distances(visual_vecs, sample)
    return AlignmentScore(rho=spearman(dt, dv), n_pairs=len(sample.pairs))


def rank_prompts(
    candidates: Sequence[PromptCandidate],
    keys: Sequence[TileKey],
    describe: DescribeOracle | Callable[[PromptCandidate], DescribeOracle],
    embed: ProviderConfig,
    visual_vecs: Sequence[np.ndarray],
    sample: PairSample,
) -> tuple[list[tuple[str, AlignmentScore]], dict[str, Exception]]:
    """Score every candidate prompt by the alignment objective.

    ``describe`` may be a single oracle (remote, prompt passed through) or a
    callable mapping each candidate to its oracle (per-candidate fixtures).
    Failed candidates are reported separately; all failing is an error.
    """
    if not candidates:
        raise InputError("no prompt candidates supplied")
    scores: list[tuple[str, AlignmentScore]] = []
    failures: dict[str, Exception] = {}
    for cand in candidates:
        oracle = describe(cand) if callable(describe) else describe
        try:
            records, errors = describe_and_embed(keys, oracle, embed,
                                                 prompt=cand.prompt_text)
            if errors:
                raise errors[0][1]
            text_vecs = [r.text_embedding for r in records]
            scores.append((cand.id, alignment_score(text_vecs, visual_vecs, sample)))
        except Exception as exc:  # per-candidate isolation
            failures[cand.id] = exc
    if not scores:
        raise AllCandidatesFailed(f"all {len(candidates)} candidates failed")
    scores.sort(key=lambda item: (-item[1].rho, item[0]))
    return scores, failures

"""Independent reference implementations used as test oracles.

These deliberately avoid the library's code paths: scalar loops, a different
haversine formulation, hand-rolled ranking. Each was written against the
definitions before the corresponding library module and must stay that way.
"""

from __future__ import annotations

import math

EARTH_RADIUS_KM = 6371.0088


def haversine_oracle(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """atan2-form haversine (the library uses the asin form)."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def cosine_oracle(a, b) -> float:
    """Scalar-loop cosine at 64-bit precision."""
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) ** 2 for x in a))
    nb = math.sqrt(sum(float(y) ** 2 for y in b))
    return dot / (na * nb)


def normalize_oracle(v):
    n = math.sqrt(sum(float(x) ** 2 for x in v))
    return [float(x) / n for x in v]


def brute_force_knn(keys, vectors, query, k):
    """Exact top-k by cosine with (score desc, key asc) ordering.

    keys are (col, row, season_index) tuples; vectors are raw (unnormalized)
    sequences. Returns [(key, score)] of length min(k, n). Matches the
    library's storage rounding by normalizing through float32 first.
    """
    import numpy as np

    qn = np.asarray(normalize_oracle(np.asarray(query, dtype=np.float32)),
                    dtype=np.float32).astype(np.float64)
    scored = []
    for key, vec in zip(keys, vectors):
        vn = np.asarray(normalize_oracle(np.asarray(vec, dtype=np.float32)),
                        dtype=np.float32).astype(np.float64)
        scored.append((key, min(1.0, max(-1.0, float(np.dot(vn, qn))))))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[: min(k, len(scored))]


def average_ranks(values):
    idx = sorted(range(len(values)), key=lambda i: values[i])
    out = [0.0] * len(values)
    i = 0
    while i < len(idx):
        j = i
        while j + 1 < len(idx) and values[idx[j + 1]] == values[idx[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            out[idx[t]] = avg
        i = j + 1
    return out


def pearson_oracle(x, y) -> float:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    dx = math.sqrt(sum((a - mx) ** 2 for a in x))
    dy = math.sqrt(sum((b - my) ** 2 for b in y))
    return num / (dx * dy)


def spearman_oracle(x, y) -> float:
    """Rank both series with average ties, then Pearson by scalar loops."""
    return pearson_oracle(average_ranks(list(x)), average_ranks(list(y)))


def fusion_oracle(proxy_items, visual_items, query_vec, k_text, k_image):
    """Single-pass two-stage fusion over every (anchor, tile) pair.

    proxy_items: [(key_tuple, text_vector)]; visual_items: [(key_tuple, vector)].
    Applies the same rules as the pipeline: top-k_text anchors by text cosine,
    per-anchor top-k_image by visual cosine, score = text_sim * visual_sim with
    non-positive visual sims dropped, dedup keeps the max, final order is
    (score desc, key asc). Built on brute scans only.
    """
    anchors = brute_force_knn([k for k, _ in proxy_items],
                              [v for _, v in proxy_items], query_vec, k_text)
    visual_lookup = dict(visual_items)
    best = {}
    for anchor_key, text_sim in anchors:
        anchor_vec = visual_lookup[anchor_key]
        hits = brute_force_knn([k for k, _ in visual_items],
                               [v for _, v in visual_items], anchor_vec, k_image)
        for key, visual_sim in hits:
            if visual_sim <= 0.0:
                continue
            score = text_sim * visual_sim
            prev = best.get(key)
            if prev is None or score > prev[0]:
                best[key] = (score, anchor_key, text_sim, visual_sim)
    ranked = sorted(best.items(), key=lambda kv: (-kv[1][0], kv[0]))
    return [(key, score, anchor, ts, vs) for key, (score, anchor, ts, vs) in ranked]

"""End-to-end acceptance checks.

Each test guards one headline behaviour of the engine at its stated tolerance
and prints a single PASS/FAIL line so a full run reads as a checklist. They
are heavier than the per-module tests and exercise the system end to end.
"""

import functools
import json
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from geoquery.alignment import (
    PromptCandidate,
    alignment_score,
    make_pair_sample,
    rank_prompts,
    spearman,
)
from geoquery.corpus import (
    DescribeOracle,
    ProxyRecord,
    build_text_index,
    key_to_text,
    load_proxy,
    save_proxy,
)
from geoquery.embedding import ProviderConfig, embed_text, l2_normalize
from geoquery.errors import FormatError
from geoquery.eval import (
    QueryOutcome,
    aggregate_outcomes,
    format_report,
    random_baseline,
)
from geoquery.geo import (
    GeoPoint,
    GridSpec,
    Season,
    TileId,
    TileKey,
    haversine_km,
    tile_centre,
    tile_of,
)
from geoquery.index import (
    KEY_DTYPE,
    Index,
    IndexEntry,
    IndexParams,
    build,
)
from geoquery.search import PRESETS, two_stage_query
from geoquery.synth import generate_world, make_queries
from oracles import brute_force_knn, spearman_oracle


def criterion(label):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {label}")
                raise
            print(f"PASS  {label}")

        return wrapper

    return decorate


def _key(i):
    return TileKey(TileId(i % 997, i // 997), Season.from_index(i % 4))


@pytest.fixture(scope="module")
def big_world():
    return generate_world(10_000, 64, 20, seed=101)


@pytest.fixture(scope="module")
def big_engine(big_world):
    world = big_world
    visual_index = build([IndexEntry(k, v) for k, v in world.visual_records])
    text_index = build_text_index(world.proxy_records)
    provider = ProviderConfig(kind="synthetic", dim=64, seed=101)
    return world, visual_index, text_index, provider


@criterion("exact kNN equals brute-force oracle on 50 randomized instances")
def test_exact_knn_oracle_equivalence():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    sizes = [int(rng.integers(100, 2000)) for _ in range(45)] + [10_000] * 5
    for trial, n in enumerate(sizes):
        dim = int(rng.choice([8, 16, 32, 64, 128] if n < 2000 else [8, 16]))
        keys = [_key(i) for i in range(n)]
        vectors = rng.standard_normal((n, dim)).astype(np.float32)
        index = build([IndexEntry(k, v) for k, v in zip(keys, vectors)])
        query = rng.standard_normal(dim).astype(np.float32)
        k = int(rng.integers(1, 21))
        got = index.knn(query, k)
        expected = brute_force_knn(
            [(x.tile.col, x.tile.row, x.season.index) for x in keys],
            vectors, query, k)
        assert [(nb.key.tile.col, nb.key.tile.row, nb.key.season.index)
                for nb in got] == [key for key, _ in expected]
        for nb, (_, score) in zip(got, expected):
            assert nb.score == pytest.approx(score, abs=1e-6)
    assert time.perf_counter() - started < 60.0


def _fusion_reference(proxy_keys, proxy_mat, visual_keys, visual_mat,
                      query_vec, k_text, k_image):
    """Vectorized single-pass fusion reference, independent of the pipeline.

    Matrices arrive float32-normalized; ranking is done with plain Python
    sorts on (score desc, key asc).
    """
    q = np.asarray(l2_normalize(query_vec), dtype=np.float64)
    text_sims = np.clip(proxy_mat.astype(np.float64) @ q, -1.0, 1.0)
    order = sorted(range(len(proxy_keys)),
                   key=lambda i: (-text_sims[i], proxy_keys[i]))[:k_text]
    visual64 = visual_mat.astype(np.float64)
    lookup = {key: i for i, key in enumerate(visual_keys)}
    best = {}
    for i in order:
        anchor_vec = visual64[lookup[proxy_keys[i]]]
        sims = np.clip(visual64 @ anchor_vec, -1.0, 1.0)
        hits = sorted(range(len(visual_keys)),
                      key=lambda j: (-sims[j], visual_keys[j]))[:k_image]
        for j in hits:
            if sims[j] <= 0.0:
                continue
            score = float(text_sims[i]) * float(sims[j])
            prev = best.get(visual_keys[j])
            if prev is None or score > prev:
                best[visual_keys[j]] = score
    return sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))


@criterion("two-stage fusion equals the exhaustive oracle, 4 presets x 50 queries")
def test_two_stage_fusion_oracle_equivalence(big_engine):
    world, visual_index, text_index, provider = big_engine
    started = time.perf_counter()

    def tup(k):
        return (k.tile.col, k.tile.row, k.season.index)

    proxy_keys = [tup(r.key) for r in world.proxy_records]
    proxy_mat = np.stack([l2_normalize(r.text_embedding)
                          for r in world.proxy_records])
    visual_keys = [tup(k) for k, _ in world.visual_records]
    visual_mat = np.stack([v for _, v in world.visual_records])
    rng = np.random.default_rng(55)
    queries = [world.query_text_for(q % 20, rng) for q in range(50)]
    for config in PRESETS.values():
        for text in queries:
            result = two_stage_query(text, config, text_index,
                                     world.proxy_records, visual_index, provider)
            expected = _fusion_reference(
                proxy_keys, proxy_mat, visual_keys, visual_mat,
                embed_text(provider, text), config.k_text, config.k_image)
            assert [tup(r.key) for r in result.results] == [k for k, _ in expected]
            for r, (_, score) in zip(result.results, expected):
                assert r.score == pytest.approx(score, abs=1e-6)
    assert time.perf_counter() - started < 120.0


@criterion("planted-cluster retrieval >= 80% top-10; random baseline < 10%")
def test_planted_retrieval_quality(big_engine):
    world, visual_index, text_index, provider = big_engine
    queries = make_queries(world, 50, seed=7)
    hits = 0
    for q in queries:
        result = two_stage_query(q["query_text"], PRESETS["balanced_large"],
                                 text_index, world.proxy_records,
                                 visual_index, provider)
        top10 = {r.key for r in result.results[:10]}
        if any(world.membership[k] == q["cluster"] for k in top10):
            hits += 1
    assert hits / len(queries) >= 0.80

    truths = [GeoPoint(q["truth"]["lat"], q["truth"]["lon"]) for q in queries]
    baseline = random_baseline([k for k, _ in world.visual_records], truths,
                               n_trials=20, seed=3, grid=world.grid)
    assert baseline < 10.0


@criterion("alignment objective: oracle agreement, invariances, graded-noise order")
def test_alignment_objective_correctness(tmp_path):
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 1000:
        n = int(rng.integers(3, 50))
        x = rng.integers(0, 9, n).astype(float)
        y = rng.integers(0, 9, n).astype(float)
        if np.all(x == x[0]) or np.all(y == y[0]):
            continue
        assert spearman(x, y) == pytest.approx(spearman_oracle(x, y), abs=1e-9)
        checked += 1

    vecs = [rng.standard_normal(16).astype(np.float32) for _ in range(40)]
    sample = make_pair_sample(40, 300, seed=0)
    assert alignment_score(vecs, [v.copy() for v in vecs], sample).rho == 1.0
    q, _ = np.linalg.qr(rng.standard_normal((16, 16)))
    mapped = [(q @ v.astype(np.float64)).astype(np.float32) for v in vecs]
    assert alignment_score(vecs, mapped, sample).rho == pytest.approx(1.0, abs=1e-6)

    provider = ProviderConfig(kind="synthetic", dim=32, seed=5)
    n = 60
    keys = [TileKey(TileId(i, 0), Season.Q1) for i in range(n)]
    pair_sample = make_pair_sample(n, 600, seed=1)
    for seed in range(20):
        noise_rng = np.random.default_rng(1000 + seed)
        words = [f"seed{seed}terrain{i}feature{i * 7}" for i in range(n)]
        garbage = [f"noise {noise_rng.integers(1 << 30)}" for _ in range(n)]
        visual = [embed_text(provider, w) for w in words]
        candidates = []
        oracles = {}
        # Nested corruption sets with per-index garbage, so each level is
        # exactly the previous one with six more descriptions destroyed.
        corruption_order = noise_rng.permutation(n)
        for level in range(5):
            corrupted = set(corruption_order[:level * 6])
            mapping = {}
            for i, k in enumerate(keys):
                mapping[key_to_text(k)] = garbage[i] if i in corrupted else words[i]
            path = tmp_path / f"s{seed}l{level}.json"
            path.write_text(json.dumps(mapping))
            oracles[f"l{level}"] = DescribeOracle(kind="fixture",
                                                  fixture_path=str(path))
            candidates.append(PromptCandidate(f"l{level}", f"prompt {level}"))
        ranking, failures = rank_prompts(candidates, keys,
                                         lambda c: oracles[c.id], provider,
                                         visual, pair_sample)
        assert not failures
        assert [cid for cid, _ in ranking] == [f"l{level}" for level in range(5)]


@criterion("geodesy: antipodal distance, symmetry, triangle inequality, tile round-trip")
def test_geodesy():
    a = GeoPoint(0.0, 0.0)
    b = GeoPoint(0.0, -180.0)
    assert haversine_km(a, b) == pytest.approx(20015.1, abs=0.1)

    rng = np.random.default_rng(8)
    lats = rng.uniform(-90, 90, 30_000)
    lons = rng.uniform(-180, 180, 30_000)
    points = [GeoPoint(float(la), float(lo)) for la, lo in zip(lats, lons)]
    for i in range(10_000):
        p, q, r = points[3 * i], points[3 * i + 1], points[3 * i + 2]
        pq = haversine_km(p, q)
        assert pq == haversine_km(q, p)
        assert pq <= haversine_km(p, r) + haversine_km(r, q) + 1e-6

    grid = GridSpec(0.046)
    cols = rng.integers(0, int(360 / 0.046) - 1, 10_000)
    rows = rng.integers(0, int(180 / 0.046) - 1, 10_000)
    for c, r in zip(cols, rows):
        tile = TileId(int(c), int(r))
        assert tile_of(grid, tile_centre(grid, tile)) == tile


@criterion("report fidelity: authored fixture reproduces the reference CSV row")
def test_report_fidelity():
    distances = [6.86, 11.48, 34.20, 40.0, 48.0, 60.0, 95.0, 150.0, 200.0, 246.46]
    outcomes = [
        QueryOutcome(f"uk-{i}", d, d <= 50.0, d <= 100.0, 0.89, "UK Floods")
        for i, d in enumerate(distances)
    ]
    report = aggregate_outcomes({"balanced_large": outcomes})
    csv = format_report(report, style="csv")
    assert "balanced_large,UK Floods,89.2,50.0,70.0,0.89" in csv.splitlines()


def _clustered_matrix(rng, n, dim, n_clusters, noise):
    prototypes = rng.standard_normal((n_clusters, dim)).astype(np.float32)
    prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)
    assign = np.arange(n) % n_clusters
    matrix = np.empty((n, dim), dtype=np.float32)
    chunk = 100_000
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        matrix[lo:hi] = prototypes[assign[lo:hi]]
        matrix[lo:hi] += noise * rng.standard_normal((hi - lo, dim)).astype(np.float32)
    return matrix, assign


@criterion("latency: 1M-entry pruned search <= 1.0 s median; exact 100k <= 1.0 s")
def test_search_latency():
    rng = np.random.default_rng(77)
    n, dim, n_planted = 1_000_000, 64, 20
    matrix, assign = _clustered_matrix(rng, n, dim, n_planted, noise=0.05)
    keys = np.zeros(n, dtype=KEY_DTYPE)
    ids = np.arange(n, dtype=np.uint32)
    keys["col"] = ids % 50_000
    keys["row"] = ids // 50_000
    index = Index.from_arrays(keys, matrix, IndexParams("pruned_clusters"))

    provider = ProviderConfig(kind="synthetic", dim=dim, seed=77)
    vocab = [[f"w{c}x{w}" * 2 for w in range(8)] for c in range(n_planted)]
    proxy_positions = rng.choice(n, 10_000, replace=False)
    proxies = []
    for pos in proxy_positions:
        c = int(assign[pos])
        words = rng.choice(vocab[c], size=4, replace=False)
        text = " ".join(words)
        key = TileKey(TileId(int(keys["col"][pos]), int(keys["row"][pos])),
                      Season.Q1)
        proxies.append(ProxyRecord(key, text, embed_text(provider, text)))
    text_index = build_text_index(proxies)

    queries = [" ".join(rng.choice(vocab[q % n_planted], size=3, replace=False))
               for q in range(50)]
    timings = []
    for text in queries:
        t0 = time.perf_counter()
        result = two_stage_query(text, PRESETS["balanced_large"], text_index,
                                 proxies, index, provider)
        timings.append(time.perf_counter() - t0)
        assert result.results
    assert statistics.median(timings) <= 1.0

    exact = Index.from_arrays(keys[:100_000].copy(), matrix[:100_000].copy())
    exact_proxies = [p for p, pos in zip(proxies, proxy_positions)
                     if pos < 100_000]
    exact_text_index = build_text_index(exact_proxies)
    exact_timings = []
    for text in queries[:10]:
        t0 = time.perf_counter()
        two_stage_query(text, PRESETS["balanced_large"], exact_text_index,
                        exact_proxies, exact, provider)
        exact_timings.append(time.perf_counter() - t0)
    assert statistics.median(exact_timings) <= 1.0


@criterion("persistence: save/load round-trips are kNN-identical; corrupt headers rejected")
def test_persistence(tmp_path):
    rng = np.random.default_rng(12)
    n, dim = 3000, 32
    entries = [IndexEntry(_key(i), rng.standard_normal(dim).astype(np.float32))
               for i in range(n)]
    for params in (IndexParams("exact"), IndexParams("pruned_clusters")):
        index = build(entries, params)
        path = tmp_path / f"{params.backend}.gqix"
        index.save(path)
        loaded = Index.load(path)
        for trial in range(20):
            q = rng.standard_normal(dim).astype(np.float32)
            assert index.knn(q, 10) == loaded.knn(q, 10)

    provider = ProviderConfig(kind="synthetic", dim=16, seed=4)
    records = [ProxyRecord(_key(i), f"tile description {i}",
                           embed_text(provider, f"tile description {i}"))
               for i in range(50)]
    proxy_path = tmp_path / "proxy.ndjson"
    save_proxy(proxy_path, records)
    reloaded, _ = load_proxy(proxy_path)
    assert [(r.key, r.description) for r in reloaded] == \
        [(r.key, r.description) for r in records]
    for a, b in zip(reloaded, records):
        np.testing.assert_allclose(a.text_embedding, b.text_embedding, atol=1e-7)

    good = (tmp_path / "exact.gqix").read_bytes()
    for corrupt in (b"JUNK" + good[4:], good[:7], b""):
        bad_path = tmp_path / "bad.gqix"
        bad_path.write_bytes(corrupt)
        with pytest.raises(FormatError):
            Index.load(bad_path)
    bad_proxy = tmp_path / "bad.ndjson"
    bad_proxy.write_text('{"format": "WRONG", "version": 1}\n')
    with pytest.raises(FormatError):
        load_proxy(bad_proxy)


@criterion("invariant suite: every engine module has a property-test module")
def test_invariant_suite_coverage():
    tests_dir = Path(__file__).parent
    covered = {
        "geo": "test_geo.py",
        "embedding": "test_embedding.py",
        "index": "test_index.py",
        "corpus": "test_corpus.py",
        "alignment": "test_alignment.py",
        "search": "test_search.py",
        "eval": "test_eval.py",
        "service": "test_service.py",
        "cli": "test_cli.py",
    }
    for module, test_file in covered.items():
        assert (tests_dir / test_file).exists(), f"missing tests for {module}"

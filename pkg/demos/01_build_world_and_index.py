#!/usr/bin/env python3
"""Build a small planted-cluster world, index it, and round-trip it to disk.

The synthetic world stands in for a real embedding corpus: every tile gets a
visual vector near one of a few cluster prototypes, and a sampled proxy
subset additionally carries text descriptions drawn from that cluster's
vocabulary.
"""

import tempfile
from pathlib import Path

from geoquery import Index, IndexEntry, IndexParams, build
from geoquery.synth import generate_world, write_world

world = generate_world(n_tiles=2000, dim=32, n_clusters=8, seed=42)
print(f"world: {len(world.visual_records)} tiles, "
      f"{len(world.proxy_records)} described proxies, "
      f"{len(world.cluster_centres)} clusters")

# Exact backend: a dense scan, always correct, fine at this scale.
exact = build(IndexEntry(k, v) for k, v in world.visual_records)
print(f"exact index: {len(exact)} entries, dim {exact.dim}")

# Pruned backend: clusters the corpus and skips clusters that provably
# cannot contain a better neighbour. Same results, less work at scale.
pruned = build((IndexEntry(k, v) for k, v in world.visual_records),
               IndexParams("pruned_clusters"))

query = world.visual_records[17][1]
# Scores can differ in the last float32 bits; the ranked keys must not.
print("top-5 agree across backends:",
      [n.key for n in exact.knn(query, 5)] == [n.key for n in pruned.knn(query, 5)])

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "visual.gqix"
    exact.save(path)
    reloaded = Index.load(path)
    print(f"saved {path.stat().st_size} bytes; "
          f"round-trip identical: {reloaded.knn(query, 5) == exact.knn(query, 5)}")

    paths = write_world(world, Path(tmp) / "world", n_queries=10, seed=42)
    for name, p in paths.items():
        print(f"  wrote {name}: {Path(p).name}")

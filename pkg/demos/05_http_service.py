#!/usr/bin/env python3
"""Walk the HTTP API in-process with a test client.

The same app serves real traffic via `geoquery serve`; here it runs against
an in-memory engine so the demo needs no sockets or fixture files.
"""

import json

from fastapi.testclient import TestClient

from geoquery import Engine, ProviderConfig, build
from geoquery.corpus import build_text_index
from geoquery.index import IndexEntry
from geoquery.service import create_app
from geoquery.synth import generate_world

world = generate_world(n_tiles=1500, dim=32, n_clusters=5, seed=31)
engine = Engine(
    grid=world.grid,
    provider=ProviderConfig(kind="synthetic", dim=32, seed=31),
    visual_index=build(IndexEntry(k, v) for k, v in world.visual_records),
    proxy_records=world.proxy_records,
    proxy_text_index=build_text_index(world.proxy_records),
)
client = TestClient(create_app(engine))

print("GET /v1/health ->", json.dumps(client.get("/v1/health").json(), indent=1))

configs = client.get("/v1/configs").json()["configs"]
print("\nGET /v1/configs ->", ", ".join(
    f"{c['name']}({c['k_text']},{c['k_image']})" for c in configs))

body = {"text": world.query_text_for(0, __import__("numpy").random.default_rng(0)),
        "config": "baseline", "top_n": 3}
resp = client.post("/v1/query", json=body).json()
print(f"\nPOST /v1/query {body['text']!r} -> {len(resp['results'])} tiles")
for r in resp["results"]:
    print(f"  ({r['col']},{r['row']},{r['season']}) score={r['score']:.4f} "
          f"centre=({r['centre']['lat']:.3f},{r['centre']['lon']:.3f})")

top = resp["results"][0]
sim = client.post("/v1/similar", json={"col": top["col"], "row": top["row"],
                                       "season": top["season"], "k": 3}).json()
print(f"\nPOST /v1/similar on the top tile -> "
      f"{[ (n['col'], n['row']) for n in sim['neighbours'] ]}")

tile = client.get(f"/v1/tiles/{top['col']}/{top['row']}").json()
print(f"\nGET /v1/tiles/{top['col']}/{top['row']} -> seasons {tile['seasons']}, "
      f"{len(tile['descriptions'])} description(s)")

err = client.post("/v1/query", json={"text": "x", "config": "wat"})
print(f"\nerror shape: {err.status_code} {err.json()}")

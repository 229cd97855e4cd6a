"""Disaster-geolocation evaluation harness.

Loads ground-truthed query sets, scores retrieval output by great-circle
distance from the best retrieved tile centre to the truth point, runs the
four-configuration ablation, and renders per-(configuration, category)
accuracy tables in markdown, CSV, or JSON.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DuplicateKeyError, EmptyResultError, FormatError, InputError
from .geo import GeoPoint, GridSpec, TileKey, haversine_km, tile_centre
from .search import QueryResult, SearchConfig

CATEGORIES = {
    "UK_Floods": "UK Floods",
    "US_Wildfires": "US Wildfires",
    "US_Droughts": "US Droughts",
    "Other": "Other",
}
CATEGORY_ORDER = ["UK Floods", "US Droughts", "US Wildfires", "Other", "Overall"]
DEFAULT_TOP_N = 10

CSV_HEADER = "Configuration,Disaster Type,Mean Distance (km),<50 km (%),<100 km (%),Search Time (s)"


@dataclass(frozen=True)
class DisasterQuery:
    id: str
    query_text: str
    truth: GeoPoint
    category: str = "Other"

    def __post_init__(self):
        if not self.id or not self.query_text:
            raise InputError("query id and text must be non-empty")
        if self.category not in CATEGORIES:
            raise InputError(f"unknown category {self.category!r}")

    @property
    def category_label(self) -> str:
        return CATEGORIES[self.category]


@dataclass(frozen=True)
class QueryOutcome:
    query_id: str
    best_distance_km: float
    hit_50: bool
    hit_100: bool
    search_time_s: float
    category_label: str = "Other"

    def __post_init__(self):
        if self.best_distance_km < 0:
            raise InputError("distance must be non-negative")
        if self.hit_50 != (self.best_distance_km <= 50.0):
            raise InputError("hit_50 inconsistent with distance")
        if self.hit_100 != (self.best_distance_km <= 100.0):
            raise InputError("hit_100 inconsistent with distance")


@dataclass(frozen=True)
class ReportRow:
    mean_distance_km: float
    median_distance_km: float
    pct_within_50: float
    pct_within_100: float
    mean_search_time_s: float
    n_queries: int


@dataclass
class EvalReport:
    """Rows keyed by (config name, category label); 'Overall' aggregates a config."""

    rows: dict[tuple[str, str], ReportRow] = field(default_factory=dict)
    n_errors: dict[str, int] = field(default_factory=dict)
    top_n: int = DEFAULT_TOP_N


def load_queries(path) -> list[DisasterQuery]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad query file: {exc}") from exc
    raw = data["queries"] if isinstance(data, dict) and "queries" in data else data
    if not isinstance(raw, list):
        raise FormatError("query file must hold a list of queries")
    queries: list[DisasterQuery] = []
    seen: set[str] = set()
    for i, rec in enumerate(raw):
        try:
            q = DisasterQuery(
                id=rec["id"],
                query_text=rec["query_text"],
                truth=GeoPoint(float(rec["truth"]["lat"]), float(rec["truth"]["lon"])),
                category=rec.get("category", "Other"),
            )
        except (KeyError, TypeError, ValueError, InputError) as exc:
            raise FormatError(f"bad query at line {i}: {exc}") from exc
        if q.id in seen:
            raise DuplicateKeyError(f"duplicate query id {q.id!r}")
        seen.add(q.id)
        queries.append(q)
    return queries


def score_query(
    result: QueryResult,
    truth: GeoPoint,
    grid: GridSpec,
    top_n: int = DEFAULT_TOP_N,
    query_id: str = "",
    category_label: str = "Other",
    search_time_s: float | None = None,
) -> QueryOutcome:
    """Best great-circle distance from truth over the top_n ranked results."""
    if not result.results:
        raise EmptyResultError(f"no results to score for query {query_id!r}")
    if top_n <= 0:
        raise InputError("top_n must be positive")
    best = min(
        haversine_km(truth, tile_centre(grid, r.key.tile))
        for r in result.results[:top_n]
    )
    if search_time_s is None:
        search_time_s = result.total_ms / 1000.0
    return QueryOutcome(
        query_id=query_id,
        best_distance_km=best,
        hit_50=best <= 50.0,
        hit_100=best <= 100.0,
        search_time_s=search_time_s,
        category_label=category_label,
    )


def aggregate_outcomes(
    outcomes_by_config: dict[str, list[QueryOutcome]],
    n_errors: dict[str, int] | None = None,
    top_n: int = DEFAULT_TOP_N,
) -> EvalReport:
    """Collapse per-query outcomes into per-(config, category) report rows."""
    report = EvalReport(top_n=top_n, n_errors=dict(n_errors or {}))
    for config_name, outcomes in outcomes_by_config.items():
        groups: dict[str, list[QueryOutcome]] = {}
        for o in outcomes:
            groups.setdefault(o.category_label, []).append(o)
        if outcomes:
            groups["Overall"] = list(outcomes)
        for label, group in groups.items():
            dists = [o.best_distance_km for o in group]
            report.rows[(config_name, label)] = ReportRow(
                mean_distance_km=math.fsum(dists) / len(dists),
                median_distance_km=statistics.median(dists),
                pct_within_50=100.0 * sum(o.hit_50 for o in group) / len(group),
                pct_within_100=100.0 * sum(o.hit_100 for o in group) / len(group),
                mean_search_time_s=math.fsum(o.search_time_s for o in group) / len(group),
                n_queries=len(group),
            )
    return report


def run_ablation(
    queries: Sequence[DisasterQuery],
    configs: Sequence[SearchConfig],
    run_query: Callable[[str, SearchConfig], QueryResult],
    grid: GridSpec,
    top_n: int = DEFAULT_TOP_N,
) -> EvalReport:
    """Run every (config, query) pair and aggregate.

    ``run_query`` is the engine hook (typically a closure over loaded corpora).
    Per-query failures are counted per config and excluded from the means.
    """
    outcomes: dict[str, list[QueryOutcome]] = {}
    errors: dict[str, int] = {}
    for config in configs:
        outcomes[config.name] = []
        errors[config.name] = 0
        for q in queries:
            t0 = time.perf_counter()
            try:
                result = run_query(q.query_text, config)
                elapsed = time.perf_counter() - t0
                outcomes[config.name].append(score_query(
                    result, q.truth, grid, top_n=top_n, query_id=q.id,
                    category_label=q.category_label, search_time_s=elapsed,
                ))
            except Exception:
                errors[config.name] += 1
    return aggregate_outcomes(outcomes, errors, top_n=top_n)


def random_baseline(
    tile_keys: Sequence[TileKey],
    truths: Sequence[GeoPoint],
    n_trials: int,
    seed: int,
    grid: GridSpec = GridSpec(),
    radius_km: float = 50.0,
) -> float:
    """Monte Carlo accuracy of picking a uniformly random tile per query."""
    if not tile_keys or not truths or n_trials <= 0:
        raise InputError("tile keys, truths, and n_trials must be non-empty/positive")
    rng = np.random.default_rng(seed)
    centres = [tile_centre(grid, k.tile) for k in tile_keys]
    hits = 0
    total = 0
    for _ in range(n_trials):
        for truth in truths:
            pick = centres[int(rng.integers(len(centres)))]
            hits += haversine_km(truth, pick) <= radius_km
            total += 1
    return 100.0 * hits / total


def _sorted_rows(report: EvalReport) -> list[tuple[str, str, ReportRow]]:
    def order(item):
        (config, label), _ = item
        cat = CATEGORY_ORDER.index(label) if label in CATEGORY_ORDER else 99
        return (config, cat)

    return [(c, l, r) for (c, l), r in sorted(report.rows.items(), key=order)]


def format_report(report: EvalReport, style: str = "markdown") -> str:
    """Render the report; distances and percentages to one decimal, seconds to two."""
    if style == "json":
        payload = {
            "top_n": report.top_n,
            "n_errors": report.n_errors,
            "rows": [
                {
                    "config": c, "category": l,
                    "mean_distance_km": r.mean_distance_km,
                    "median_distance_km": r.median_distance_km,
                    "pct_within_50": r.pct_within_50,
                    "pct_within_100": r.pct_within_100,
                    "mean_search_time_s": r.mean_search_time_s,
                    "n_queries": r.n_queries,
                }
                for c, l, r in _sorted_rows(report)
            ],
        }
        return json.dumps(payload, indent=1)
    lines: list[str] = []
    if style == "csv":
        lines.append(CSV_HEADER)
        for c, l, r in _sorted_rows(report):
            lines.append(
                f"{c},{l},{r.mean_distance_km:.1f},{r.pct_within_50:.1f},"
                f"{r.pct_within_100:.1f},{r.mean_search_time_s:.2f}"
            )
        return "\n".join(lines) + "\n"
    if style == "markdown":
        lines.append("| Configuration | Disaster Type | Mean Distance (km) | <50 km (%) | <100 km (%) | Search Time (s) |")
        lines.append("|---|---|---|---|---|---|")
        for c, l, r in _sorted_rows(report):
            lines.append(
                f"| {c} | {l} | {r.mean_distance_km:.1f} | {r.pct_within_50:.1f} "
                f"| {r.pct_within_100:.1f} | {r.mean_search_time_s:.2f} |"
            )
        return "\n".join(lines) + "\n"
    raise InputError(f"unknown report style {style!r}")


def report_from_json(text: str) -> EvalReport:
    """Inverse of format_report(style='json')."""
    payload = json.loads(text)
    report = EvalReport(top_n=payload.get("top_n", DEFAULT_TOP_N),
                        n_errors=payload.get("n_errors", {}))
    for row in payload["rows"]:
        report.rows[(row["config"], row["category"])] = ReportRow(
            mean_distance_km=row["mean_distance_km"],
            median_distance_km=row["median_distance_km"],
            pct_within_50=row["pct_within_50"],
            pct_within_100=row["pct_within_100"],
            mean_search_time_s=row["mean_search_time_s"],
            n_queries=row["n_queries"],
        )
    return report

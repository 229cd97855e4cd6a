import { ApiClient, ApiError } from "./api.js";
import type {
  Crumb,
  LayerTile,
  QueryResponse,
  SimilarResponse,
  TileRef,
  ViewState,
} from "./types.js";

function sameTile(a: TileRef, b: TileRef): boolean {
  return a.col === b.col && a.row === b.row && a.season === b.season;
}

/** Response order and scores are preserved verbatim; only an anchor flag is added. */
export function queryLayer(resp: QueryResponse): LayerTile[] {
  return resp.results.map((r) => ({
    col: r.col,
    row: r.row,
    season: r.season,
    score: r.score,
    bounds: r.bounds,
    centre: r.centre,
    isAnchor: resp.anchors.some((a) => sameTile(a, r)),
  }));
}

export function similarLayer(resp: SimilarResponse): LayerTile[] {
  return resp.neighbours.map((n) => ({
    col: n.col,
    row: n.row,
    season: n.season,
    score: n.score,
    bounds: n.bounds,
    centre: n.centre,
    isAnchor: false,
  }));
}

function initialState(): ViewState {
  return {
    centre: { lat: 20, lon: 0 },
    zoom: 2,
    queryText: "",
    configName: "",
    configs: [],
    selected: null,
    layer: [],
    breadcrumb: [],
    status: "idle",
    banner: null,
  };
}

type Listener = (state: ViewState) => void;

/**
 * Single source of truth for the page. At most one request is in flight per
 * panel; a monotonically increasing token discards responses that finish
 * after a newer request has been issued.
 */
export class ViewStore {
  state: ViewState = initialState();
  private requestToken = 0;
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  /** Populate the config picker and preselect the service's default. */
  async init(): Promise<void> {
    const [health, configs] = await Promise.all([
      this.api.health(),
      this.api.configs(),
    ]);
    this.state.configs = configs.configs;
    this.state.configName = health.default_config;
    this.emit();
  }

  setConfig(name: string): void {
    this.state.configName = name;
    this.emit();
  }

  dismissBanner(): void {
    this.state.banner = null;
    this.emit();
  }

  async submitQuery(text: string): Promise<void> {
    const token = ++this.requestToken;
    this.state.queryText = text;
    this.state.status = "loading";
    this.emit();
    try {
      const resp = await this.api.query(text, this.state.configName || undefined);
      if (token !== this.requestToken) return; // stale response, discard
      this.state.layer = queryLayer(resp);
      this.state.breadcrumb = [];
      this.state.selected = null;
      this.state.status = "idle";
      this.state.banner = null;
    } catch (err) {
      if (token !== this.requestToken) return;
      this.fail(err);
    }
    this.emit();
  }

  /** Replace the layer with the tile's visual neighbours; remember where we were. */
  async pivotSimilarity(tile: TileRef, k = 30): Promise<void> {
    const token = ++this.requestToken;
    const from: Crumb = {
      label: `(${tile.col},${tile.row},${tile.season})`,
      layer: this.state.layer,
      selected: this.state.selected,
    };
    this.state.status = "loading";
    this.emit();
    try {
      const resp = await this.api.similar(tile, k);
      if (token !== this.requestToken) return;
      this.state.breadcrumb = [...this.state.breadcrumb, from];
      this.state.layer = similarLayer(resp);
      this.state.selected = tile;
      this.state.status = "idle";
      this.state.banner = null;
    } catch (err) {
      if (token !== this.requestToken) return;
      this.fail(err);
    }
    this.emit();
  }

  /** Step one pivot back, restoring that layer exactly as it was. */
  goBack(): void {
    const crumb = this.state.breadcrumb[this.state.breadcrumb.length - 1];
    if (!crumb) return;
    this.state.breadcrumb = this.state.breadcrumb.slice(0, -1);
    this.state.layer = crumb.layer;
    this.state.selected = crumb.selected;
    this.state.status = "idle";
    this.emit();
  }

  private fail(err: unknown): void {
    this.state.status = "error";
    if (err instanceof ApiError) {
      this.state.banner = { error_code: err.errorCode, message: err.message };
    } else {
      this.state.banner = {
        error_code: "NetworkError",
        message: err instanceof Error ? err.message : String(err),
      };
    }
  }
}

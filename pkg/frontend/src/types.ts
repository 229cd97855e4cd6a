/** Wire types for the /v1 HTTP API. Field names mirror the service exactly. */

export interface LatLon {
  lat: number;
  lon: number;
}

export interface TileBounds {
  lat0: number;
  lon0: number;
  lat1: number;
  lon1: number;
}

export interface TileRef {
  col: number;
  row: number;
  season: string;
}

export interface ConfigInfo {
  name: string;
  k_text: number;
  k_image: number;
}

export interface QueryResultTile extends TileRef {
  score: number;
  anchor: TileRef;
  anchor_text_sim: number;
  visual_sim: number;
  bounds: TileBounds;
  centre: LatLon;
}

export interface AnchorInfo extends TileRef {
  score: number;
}

export interface QueryResponse {
  query_text: string;
  config: ConfigInfo;
  results: QueryResultTile[];
  anchors: AnchorInfo[];
  stage1_ms: number;
  stage2_ms: number;
  total_ms: number;
}

export interface SimilarNeighbour extends TileRef {
  score: number;
  bounds: TileBounds;
  centre: LatLon;
}

export interface SimilarResponse {
  neighbours: SimilarNeighbour[];
}

export interface ConfigsResponse {
  configs: ConfigInfo[];
}

export interface HealthResponse {
  status: string;
  visual_count: number;
  proxy_count: number;
  visual_dim: number;
  text_dim: number;
  backend: string;
  default_config: string;
}

export interface ErrorBody {
  error_code: string;
  message: string;
}

/** One rendered tile of the active result layer. */
export interface LayerTile {
  col: number;
  row: number;
  season: string;
  score: number;
  bounds: TileBounds;
  centre: LatLon;
  isAnchor: boolean;
}

export interface Crumb {
  label: string;
  layer: LayerTile[];
  selected: TileRef | null;
}

export type RequestStatus = "idle" | "loading" | "error";

export interface ViewState {
  centre: LatLon;
  zoom: number;
  queryText: string;
  configName: string;
  configs: ConfigInfo[];
  selected: TileRef | null;
  layer: LayerTile[];
  breadcrumb: Crumb[];
  status: RequestStatus;
  banner: ErrorBody | null;
}

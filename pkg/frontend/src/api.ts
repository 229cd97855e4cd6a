import type {
  ConfigsResponse,
  ErrorBody,
  HealthResponse,
  QueryResponse,
  SimilarResponse,
  TileRef,
} from "./types.js";

/** Minimal fetch shape so tests can inject a stub. */
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin client over the documented /v1 endpoints; issues nothing else. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  async query(
    text: string,
    config?: string,
    topN?: number,
  ): Promise<QueryResponse> {
    const body: Record<string, unknown> = { text };
    if (config !== undefined) body.config = config;
    if (topN !== undefined) body.top_n = topN;
    return this.post<QueryResponse>("/v1/query", body);
  }

  async similar(tile: TileRef, k: number): Promise<SimilarResponse> {
    return this.post<SimilarResponse>("/v1/similar", { ...tile, k });
  }

  async configs(): Promise<ConfigsResponse> {
    return this.get<ConfigsResponse>("/v1/configs");
  }

  async health(): Promise<HealthResponse> {
    return this.get<HealthResponse>("/v1/health");
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    return this.unwrap<T>(resp);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.unwrap<T>(resp);
  }

  private async unwrap<T>(resp: {
    ok: boolean;
    status: number;
    json(): Promise<unknown>;
  }): Promise<T> {
    const payload = await resp.json();
    if (!resp.ok) {
      const err = payload as Partial<ErrorBody>;
      throw new ApiError(
        resp.status,
        err.error_code ?? "UnknownError",
        err.message ?? `request failed with status ${resp.status}`,
      );
    }
    return payload as T;
  }
}

import type {
  GeoNodeView,
  History,
  RecommendationRound,
  SelectionsEcho,
  StateView,
  WhatIfResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error body shape the service uses for every non-2xx answer. */
interface ErrorBody {
  code?: string;
  message?: string;
}

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

/** Another round is already pending for the destination (409 pending_round). */
export class PendingRoundError extends ApiRequestError {}

/** The submitted round number no longer matches the pending round (409 stale_round). */
export class StaleRoundError extends ApiRequestError {}

function toError(status: number, body: ErrorBody): ApiRequestError {
  const code = body.code ?? "error";
  const message = body.message ?? `request failed with status ${status}`;
  if (code === "pending_round") return new PendingRoundError(status, code, message);
  if (code === "stale_round") return new StaleRoundError(status, code, message);
  return new ApiRequestError(status, code, message);
}

export interface ApiClientOptions {
  baseUrl?: string;
  token?: string;
  fetchImpl?: FetchLike;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchImpl: FetchLike;

  constructor(options: ApiClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = {
      ...(init?.headers as Record<string, string> | undefined),
    };
    if (this.token !== undefined) headers["x-api-token"] = this.token;
    if (init?.body !== undefined) headers["content-type"] = "application/json";
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers,
    });
    const body = await response.json().catch(() => ({}));
    if (!response.ok) throw toError(response.status, body as ErrorBody);
    return body as T;
  }

  getRecommendations(
    destId: string,
    params: { k?: number; seed?: number } = {},
  ): Promise<RecommendationRound> {
    const query = new URLSearchParams();
    if (params.k !== undefined) query.set("k", String(params.k));
    if (params.seed !== undefined) query.set("seed", String(params.seed));
    const suffix = query.size > 0 ? `?${query.toString()}` : "";
    return this.request(
      `/v1/destinations/${encodeURIComponent(destId)}/recommendations${suffix}`,
    );
  }

  postSelections(
    destId: string,
    roundT: number,
    selected: string[],
  ): Promise<SelectionsEcho> {
    return this.request(
      `/v1/destinations/${encodeURIComponent(destId)}/selections`,
      {
        method: "POST",
        body: JSON.stringify({ round_t: roundT, selected }),
      },
    );
  }

  getHistory(destId: string): Promise<History> {
    return this.request(`/v1/destinations/${encodeURIComponent(destId)}/history`);
  }

  getState(): Promise<StateView> {
    return this.request("/v1/state");
  }

  getGeosig(nodeId: string): Promise<{ id: string; domain: string; pairs: [number, number][]; flat: number[] }> {
    return this.request(`/v1/nodes/${encodeURIComponent(nodeId)}/geosig`);
  }

  getNodes(): Promise<{ nodes: GeoNodeView[] }> {
    return this.request("/v1/nodes");
  }

  whatIfHub(body: {
    lat: number;
    lon: number;
    fraction: number;
    seed?: number;
    max_mean?: number;
    dest_id?: string;
  }): Promise<WhatIfResponse> {
    return this.request("/v1/whatif/hub", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }
}

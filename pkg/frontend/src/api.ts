import type {
  CurvePoint,
  LabelResponse,
  Metrics,
  QueryResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: unknown,
  ) {
    super(`API error ${status}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the session endpoints; fetch is injectable so
 * tests can run against an in-memory server. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body);
    }
    return body as T;
  }

  getQuery(sessionId: string): Promise<QueryResponse> {
    return this.request(`/sessions/${sessionId}/query`);
  }

  postLabel(
    sessionId: string,
    instanceId: number,
    label: 0 | 1,
  ): Promise<LabelResponse> {
    return this.request(`/sessions/${sessionId}/label`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ instance_id: instanceId, label }),
    });
  }

  async getCurve(sessionId: string): Promise<CurvePoint[]> {
    const body = await this.request<{ curve: CurvePoint[] }>(
      `/sessions/${sessionId}/curve`,
    );
    return body.curve;
  }

  getMetrics(sessionId: string): Promise<Metrics> {
    return this.request(`/sessions/${sessionId}/metrics`);
  }
}

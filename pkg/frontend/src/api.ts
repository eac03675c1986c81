/** Typed client for the live-service JSON API.
 *
 * The console performs no forecasting math of its own: every number it
 * shows comes out of these response documents verbatim.
 */

export type Metric = "abs" | "elec" | "vald";

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.name = "ApiError";
  }
}

export interface StationInfo {
  id: string;
  name: string;
  electorate_cur: number;
  declared: boolean;
}

export interface SessionDocument {
  session_id: string;
  revision: number;
  cur_parties: string[];
  counted_parties: string[];
  n_stations: number;
  declared_count: number;
  grouping: number[];
  forecast_digest: string | null;
  stations: StationInfo[];
}

export interface ForecastDocument {
  cur_parties: string[];
  party_totals: number[];
  pct_elec: number[];
  pct_vald: number[];
  declared_count: number;
  undeclared_count: number;
  per_station: Record<string, number[]>;
}

export interface ForecastBody {
  revision: number;
  metric: string;
  forecast: ForecastDocument;
}

export interface DeclareResult {
  revision: number;
  declared_count: number;
  changed: boolean;
}

export interface GroupProfileBody {
  revision: number;
  election: string;
  profile: {
    parties: string[];
    member_counts: Record<string, number>;
    group_means: Record<string, Record<string, number>>;
    global_means: Record<string, number>;
  };
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface JobDocument {
  job_id: string;
  session_id: string;
  status: JobStatus;
  generation: number;
  best_fitness: number | null;
  labels: number[] | null;
  error: string | null;
  config: Record<string, unknown>;
}

export interface ApplyResult {
  revision: number;
  grouping: number[];
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await fetch(this.baseUrl + path, init);
    const text = await resp.text();
    const parsed: unknown = text ? JSON.parse(text) : null;
    if (!resp.ok) {
      throw new ApiError(resp.status, parsed as ApiErrorBody);
    }
    return parsed as T;
  }

  createSession(dataset: unknown): Promise<{ session_id: string; revision: number }> {
    return this.request("POST", "/api/sessions", dataset);
  }

  getSession(sessionId: string): Promise<SessionDocument> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  declare(sessionId: string, stationId: string, votes: number[]): Promise<DeclareResult> {
    return this.request("POST", `/api/sessions/${sessionId}/declarations`, {
      station_id: stationId,
      votes,
    });
  }

  getForecast(sessionId: string, metric: Metric): Promise<ForecastBody> {
    return this.request("GET", `/api/sessions/${sessionId}/forecast?metric=${metric}`);
  }

  getGroups(sessionId: string): Promise<GroupProfileBody> {
    return this.request("GET", `/api/sessions/${sessionId}/groups`);
  }

  startOptimize(sessionId: string, config: Record<string, unknown>): Promise<JobDocument> {
    return this.request("POST", `/api/sessions/${sessionId}/optimize`, config);
  }

  getJob(jobId: string): Promise<JobDocument> {
    return this.request("GET", `/api/jobs/${jobId}`);
  }

  applyJob(sessionId: string, jobId: string): Promise<ApplyResult> {
    return this.request("POST", `/api/sessions/${sessionId}/apply/${jobId}`);
  }

  eventsUrl(sessionId: string): string {
    return `${this.baseUrl}/api/sessions/${sessionId}/events`;
  }
}

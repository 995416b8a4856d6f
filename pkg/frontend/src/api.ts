// Typed client for the session server's HTTP API.

export interface DialogueOut {
  time: string;
  speaker: string;
  text: string;
  nonce?: string;
}

export interface StepInfoOut {
  step_id: string;
  step_note: string;
  suggested_message: string | null;
  mistake: string | null;
}

export interface MistakeOut {
  kind: string;
  time: string;
}

export interface TrackerStateOut {
  step_id: string;
  tabletop_lifted: boolean;
  sanded: boolean;
  flipped: boolean;
  frames_placed: number;
  frame_screws: number;
  legs_lifted: number;
  leg_screws: number;
  drilled: number;
  table_placed: boolean;
  mistakes: MistakeOut[];
}

export interface SessionOut {
  id: string;
  created_at: number;
  backend: string;
  shots: number;
  task: string;
  greeting: DialogueOut;
  step: StepInfoOut;
  nonce: string | null;
}

export interface PostEventResponse {
  responses: DialogueOut[];
  step: StepInfoOut;
  state: TrackerStateOut;
  latency: number;
  nonce: string | null;
}

export interface TranscriptResponse {
  id: string;
  dialogues: DialogueOut[];
  step: StepInfoOut;
  state: TrackerStateOut;
}

export interface TaskOut {
  id: string;
  name: string;
  materials: string[];
  steps: { id: string; instruction: string; finished: string }[];
  mistakes: { kind: string; corrective: string; implies_step: string }[];
  activities: string[];
  completion_message: string;
}

export interface CreateSessionBody {
  backend?: string;
  shots?: number;
  window_size?: number;
  endpoint?: string;
  model?: string;
  auth_env?: string;
  temperature?: number;
  nonce?: string;
}

export interface PostEventBody {
  speaker: "User" | "Wearable";
  text: string;
  client_time?: string;
  nonce?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface ClientOptions {
  token?: string;
  fetchFn?: typeof fetch;
}

export class Client {
  private readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;

  constructor(
    baseUrl: string,
    private readonly opts: ClientOptions = {},
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = opts.fetchFn ?? ((...args) => globalThis.fetch(...args));
  }

  authHeaders(): Record<string, string> {
    return this.opts.token ? { Authorization: `Bearer ${this.opts.token}` } : {};
  }

  streamUrl(id: string, limit?: number): string {
    const suffix = limit === undefined ? "" : `?limit=${limit}`;
    return `${this.baseUrl}/v1/sessions/${id}/stream${suffix}`;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  task(): Promise<TaskOut> {
    return this.request("GET", "/v1/task");
  }

  createSession(body: CreateSessionBody = {}): Promise<SessionOut> {
    return this.request("POST", "/v1/sessions", body);
  }

  postEvent(id: string, body: PostEventBody): Promise<PostEventResponse> {
    return this.request("POST", `/v1/sessions/${id}/events`, body);
  }

  transcript(id: string): Promise<TranscriptResponse> {
    return this.request("GET", `/v1/sessions/${id}/transcript`);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: { "Content-Type": "application/json", ...this.authHeaders() },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = `request failed with status ${response.status}`;
      try {
        const data = await response.json();
        if (typeof data.detail === "string") detail = data.detail;
        else if (data.detail !== undefined) detail = JSON.stringify(data.detail);
      } catch {
        // keep the status-based message
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}

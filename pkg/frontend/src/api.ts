/** Typed client for the session service. Loopback origins only, ever. */

import type {
  CloseResponse,
  ExportResponse,
  HealthResponse,
  IntakeResponse,
  PatientInputDict,
  ProfileDict,
  ProgressResponse,
  StartRequest,
  StartResponse,
  StateSummary,
  StepResponse,
} from "./types.js";

// Node's URL keeps the brackets on an IPv6 hostname; browsers vary.
const LOOPBACK_HOSTNAMES = new Set(["127.0.0.1", "localhost", "::1", "[::1]"]);

export class NonLoopbackOrigin extends Error {}

export class ServiceUnreachable extends Error {}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly state?: StateSummary,
  ) {
    super(message);
  }
}

export class ServiceClient {
  readonly origin: string;

  constructor(origin: string) {
    let url: URL;
    try {
      url = new URL(origin);
    } catch {
      throw new NonLoopbackOrigin(`not a valid origin: ${origin}`);
    }
    if (url.protocol !== "http:" || !LOOPBACK_HOSTNAMES.has(url.hostname)) {
      throw new NonLoopbackOrigin(
        `refusing non-loopback origin ${origin}; patient data stays on this machine`,
      );
    }
    this.origin = url.origin;
  }

  private async call(
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<{ status: number; json: unknown }> {
    let response: Response;
    try {
      response = await fetch(this.origin + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceUnreachable(String(err));
    }
    const text = await response.text();
    const json = text ? JSON.parse(text) : null;
    return { status: response.status, json };
  }

  private async expect<T>(
    method: "GET" | "POST",
    path: string,
    okStatus: number,
    body?: unknown,
  ): Promise<T> {
    const { status, json } = await this.call(method, path, body);
    if (status !== okStatus) {
      // Error bodies carry {error: {code, message}} with any echoed session
      // state as a top-level sibling.
      const parsed = json as { error?: { code?: string; message?: string }; state?: StateSummary };
      throw new ServiceError(
        status,
        parsed?.error?.code ?? "unexpected_status",
        parsed?.error?.message ?? `expected ${okStatus}, got ${status}`,
        parsed?.state,
      );
    }
    return json as T;
  }

  healthz(): Promise<HealthResponse> {
    return this.expect("GET", "/healthz", 200);
  }

  intake(profile: ProfileDict, timestampMs: number): Promise<IntakeResponse> {
    return this.expect("POST", "/intake", 200, { profile, timestamp_ms: timestampMs });
  }

  startSession(request: StartRequest): Promise<StartResponse> {
    return this.expect("POST", "/session/start", 201, request);
  }

  respond(sessionId: string, input: PatientInputDict): Promise<StepResponse> {
    return this.expect("POST", `/session/${sessionId}/respond`, 200, input);
  }

  closeSession(sessionId: string, timestampMs: number): Promise<CloseResponse> {
    return this.expect("POST", `/session/${sessionId}/close`, 200, {
      timestamp_ms: timestampMs,
    });
  }

  /** null means the service has nothing recorded yet (204). */
  async progress(): Promise<ProgressResponse | null> {
    const { status, json } = await this.call("GET", "/progress");
    if (status === 204) return null;
    if (status !== 200) {
      throw new ServiceError(status, "unexpected_status", `progress returned ${status}`);
    }
    return json as ProgressResponse;
  }

  async consent(confirmation: string): Promise<string> {
    const body = await this.expect<{ consent_token: string }>("POST", "/consent", 200, {
      confirmation,
    });
    return body.consent_token;
  }

  exportSummaries(
    token: string,
    recipient: string,
    outPath: string,
    timestampMs: number,
  ): Promise<ExportResponse> {
    return this.expect("POST", "/export", 200, {
      consent_token: token,
      recipient,
      out_path: outPath,
      timestamp_ms: timestampMs,
    });
  }
}

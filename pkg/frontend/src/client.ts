/** Thin typed client for the engine's five /v1 endpoints. */

import { AssistResponse, SnapshotDoc } from "./types";

export class EngineError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface InterfaceStatus {
  interface_id: string;
  status: string;
  handbook_size: number;
}

type FetchLike = typeof fetch;

export class EngineClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async call<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).error ?? text;
      } catch {
        /* plain text error */
      }
      throw new EngineError(resp.status, `${resp.status}: ${detail}`);
    }
    return JSON.parse(text) as T;
  }

  initInterface(
    url: string,
    title: string,
    snapshot: SnapshotDoc,
  ): Promise<{ job_id: string; interface_id: string }> {
    return this.call("POST", "/v1/interfaces", { url, title, snapshot });
  }

  interfaceStatus(interfaceId: string): Promise<InterfaceStatus> {
    return this.call("GET", `/v1/interfaces/${interfaceId}`);
  }

  assist(req: {
    interface_id: string;
    challenge: string;
    snapshot: SnapshotDoc;
    selected_elements?: number[];
    session_id?: string;
  }): Promise<AssistResponse> {
    return this.call("POST", "/v1/assist", req);
  }

  feedback(caseId: string, rating: 1 | -1): Promise<{ ok: boolean }> {
    return this.call("POST", "/v1/feedback", { case_id: caseId, rating });
  }

  exportHandbook(interfaceId: string): Promise<unknown> {
    return this.call("GET", `/v1/interfaces/${interfaceId}/handbook`);
  }

  /** Poll until the interface build leaves the "building" state. */
  async waitReady(
    interfaceId: string,
    timeoutMs = 30000,
  ): Promise<InterfaceStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.interfaceStatus(interfaceId);
      if (status.status !== "building" && status.status !== "pending") {
        return status;
      }
      if (Date.now() > deadline) {
        throw new EngineError(0, "interface build timed out");
      }
      await new Promise((r) => setTimeout(r, 200));
    }
  }
}

// Thin typed client for the engine HTTP API. fetch is injectable so tests
// can capture requests without a server.

import type { LayoutDoc, LayoutEntry, Rulebook, SessionView, TurnRequest, TurnView } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class EngineApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new EngineApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class EngineClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchImpl(this.url(path), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    }).then((resp) => asJson<T>(resp));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchImpl(this.url(path)).then((resp) => asJson<T>(resp));
  }

  createSession(overrides: Record<string, unknown> = {}): Promise<{ id: string }> {
    return this.post('/session', overrides);
  }

  submitTurn(sessionId: string, turn: TurnRequest): Promise<TurnView> {
    return this.post(`/session/${sessionId}/turn`, turn);
  }

  getState(sessionId: string): Promise<SessionView> {
    return this.get(`/session/${sessionId}/state`);
  }

  getLayout(sessionId: string, k: number): Promise<LayoutDoc> {
    return this.get(`/session/${sessionId}/layout/${k}`);
  }

  overrideLayout(sessionId: string, k: number, entries: LayoutEntry[]): Promise<TurnView> {
    return this.post(`/session/${sessionId}/layout/${k}/override`, { entries });
  }

  getRules(): Promise<Rulebook> {
    return this.get('/rules');
  }

  imageUrl(sessionId: string, k: number): string {
    return this.url(`/session/${sessionId}/image/${k}`);
  }

  async fetchImage(sessionId: string, k: number): Promise<ArrayBuffer> {
    const resp = await this.fetchImpl(this.imageUrl(sessionId, k));
    if (!resp.ok) throw new EngineApiError(resp.status, 'image not available');
    return resp.arrayBuffer();
  }
}

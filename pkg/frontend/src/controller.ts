// Session controller: owns the view state and serializes engine calls.
// One request in flight per session tab; everything re-renders from the
// polled state, never from client-side mutation.

import { EngineClient } from './api.js';
import { sameBoxes } from './overlay.js';
import type { Box, LayoutEntry, Rulebook, SessionView, TurnRequest } from './types.js';

export type Listener = (view: SessionView | null) => void;

export class SessionController {
  private sessionId: string | null = null;
  private view: SessionView | null = null;
  private listeners: Listener[] = [];
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  inFlight = false;
  lastError: string | null = null;
  rules: Rulebook | null = null;

  constructor(readonly client: EngineClient) {}

  get id(): string | null {
    return this.sessionId;
  }

  get state(): SessionView | null {
    return this.view;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.view);
  }

  async start(overrides: Record<string, unknown> = {}): Promise<string> {
    const created = await this.client.createSession(overrides);
    this.sessionId = created.id;
    this.rules = await this.client.getRules();
    await this.refresh();
    return created.id;
  }

  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    this.view = await this.client.getState(this.sessionId);
    this.emit();
  }

  /** Submit one turn. Returns false (and does nothing) while another turn
   * is in flight: the client-side mirror of the engine's 409 contract. */
  async submitTurn(turn: TurnRequest): Promise<boolean> {
    if (!this.sessionId || this.inFlight) return false;
    if (!turn.prompt.trim()) {
      this.lastError = 'prompt is empty';
      this.emit();
      return false;
    }
    this.inFlight = true;
    this.lastError = null;
    this.emit();
    try {
      await this.client.submitTurn(this.sessionId, turn);
      await this.refresh();
      return true;
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }

  /** Post an edited layout for turn k. A no-op edit (boxes unchanged)
   * produces no request at all. */
  async overrideLayout(k: number, edited: LayoutEntry[]): Promise<boolean> {
    if (!this.sessionId || this.inFlight || !this.view) return false;
    const turn = this.view.turns.find((t) => t.k === k);
    if (!turn || sameBoxes(turn.layout.entries, edited)) return false;
    this.inFlight = true;
    this.lastError = null;
    this.emit();
    try {
      await this.client.overrideLayout(this.sessionId, k, edited);
      await this.refresh();
      return true;
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }

  /** The previous turn's box for a subject id, for edit-mode region picks. */
  editRegionFor(subjectId: string): Box | null {
    const turns = this.view?.turns ?? [];
    const last = turns[turns.length - 1];
    const entry = last?.layout.entries.find((e) => e.id === subjectId);
    return entry ? entry.box : null;
  }

  startPolling(intervalMs = 2000): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      if (!this.inFlight) void this.refresh().catch(() => undefined);
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}

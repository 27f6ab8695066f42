// DOM wiring for the studio: prompt form, turn timeline, layout overlay with
// draggable boxes, and the subject inspector. All engine truth arrives via
// the controller; this file only renders and forwards events.

import { EngineClient } from './api.js';
import { SessionController } from './controller.js';
import { applyDrag, hitTest, renderOverlay, type DragState } from './overlay.js';
import { findViolations } from './rules.js';
import type { LayoutEntry, SessionView, TurnView } from './types.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const client = new EngineClient(window.location.origin);
const controller = new SessionController(client);

let selectedTurn: TurnView | null = null;
let editedEntries: LayoutEntry[] | null = null;
let drag: DragState | null = null;
let selectedBoxId: string | null = null;
let canvasScale = 1;

const promptInput = $('prompt') as HTMLInputElement;
const modeSelect = $('mode') as HTMLSelectElement;
const editTarget = $('edit-target') as HTMLSelectElement;
const submitButton = $('submit') as HTMLButtonElement;
const statusLine = $('status');
const timeline = $('timeline');
const subjectsPane = $('subjects');
const turnImage = $('turn-image') as HTMLImageElement;
const overlayCanvas = $('overlay') as HTMLCanvasElement;
const violationsPane = $('violations');
const applyButton = $('apply-layout') as HTMLButtonElement;
const resetButton = $('reset-layout') as HTMLButtonElement;

function entriesOnCanvas(): LayoutEntry[] {
  return editedEntries ?? selectedTurn?.layout.entries ?? [];
}

function redrawOverlay(): void {
  const ctx = overlayCanvas.getContext('2d');
  if (!ctx || !selectedTurn) return;
  renderOverlay(ctx, entriesOnCanvas(), { scale: canvasScale, selectedId: selectedBoxId });
  const rules = controller.rules;
  if (rules) {
    const found = findViolations(entriesOnCanvas(), selectedTurn.layout.frame, rules);
    violationsPane.textContent = found.length ? found.join('\n') : 'layout looks compliant';
  }
  const dirty = editedEntries !== null;
  applyButton.disabled = !dirty || controller.inFlight;
  resetButton.disabled = !dirty;
}

function selectTurn(turn: TurnView): void {
  selectedTurn = turn;
  editedEntries = null;
  selectedBoxId = null;
  turnImage.src = `${turn.image_url}?rev=${turn.revisions}`;
  turnImage.onload = () => {
    canvasScale = turnImage.clientWidth / turn.layout.frame.width;
    overlayCanvas.width = turnImage.clientWidth;
    overlayCanvas.height = turnImage.clientHeight;
    redrawOverlay();
  };
}

function renderTimeline(view: SessionView): void {
  timeline.replaceChildren();
  for (const turn of view.turns) {
    const item = document.createElement('button');
    item.className = 'turn' + (selectedTurn?.k === turn.k ? ' active' : '');
    item.textContent = `${turn.k}. ${turn.prompt}` + (turn.revisions ? ` (rev ${turn.revisions})` : '');
    item.addEventListener('click', () => {
      selectTurn(turn);
      renderTimeline(view);
    });
    timeline.append(item);
  }
}

function renderSubjects(view: SessionView): void {
  subjectsPane.replaceChildren();
  editTarget.replaceChildren(new Option('whole frame', ''));
  for (const subject of view.subjects) {
    const row = document.createElement('div');
    row.className = 'subject';
    const captions = Object.entries(subject.captions)
      .map(([turn, caption]) => `t${turn}: ${caption}`)
      .join('\n');
    row.innerHTML = `<strong>${subject.id}</strong> ${subject.name}` +
      (subject.has_embedding ? ' <span class="locked">locked</span>' : '');
    row.title = captions;
    subjectsPane.append(row);
    editTarget.append(new Option(`${subject.id} ${subject.name}`, subject.id));
  }
}

controller.onChange((view) => {
  statusLine.textContent = controller.inFlight
    ? 'turn in flight…'
    : controller.lastError ?? (view ? `session ${view.id}` : 'no session');
  submitButton.disabled = controller.inFlight;
  promptInput.disabled = controller.inFlight;
  if (!view) return;
  renderTimeline(view);
  renderSubjects(view);
  const latest = view.turns[view.turns.length - 1];
  if (latest && (!selectedTurn || selectedTurn.k < latest.k)) selectTurn(latest);
  if (selectedTurn) {
    const fresh = view.turns.find((t) => t.k === selectedTurn!.k);
    if (fresh && fresh.revisions !== selectedTurn.revisions) selectTurn(fresh);
  }
  redrawOverlay();
});

$('turn-form').addEventListener('submit', (event) => {
  event.preventDefault();
  const mode = modeSelect.value === 'edit' ? 'edit' : 'generate';
  const body: Parameters<SessionController['submitTurn']>[0] = {
    prompt: promptInput.value,
    mode,
  };
  if (mode === 'edit' && editTarget.value) body.edit_target = editTarget.value;
  void controller.submitTurn(body).then((accepted) => {
    if (accepted) promptInput.value = '';
  });
});

overlayCanvas.addEventListener('pointerdown', (event) => {
  if (!selectedTurn) return;
  const rect = overlayCanvas.getBoundingClientRect();
  const x = (event.clientX - rect.left) / canvasScale;
  const y = (event.clientY - rect.top) / canvasScale;
  const hit = hitTest(entriesOnCanvas(), x, y);
  if (!hit) {
    selectedBoxId = null;
    redrawOverlay();
    return;
  }
  const entries = entriesOnCanvas();
  const entry = entries.find((e) => e.id === hit.id)!;
  selectedBoxId = hit.id;
  drag = { id: hit.id, handle: hit.handle, startBox: entry.box, startX: x, startY: y };
  overlayCanvas.setPointerCapture(event.pointerId);
  redrawOverlay();
});

overlayCanvas.addEventListener('pointermove', (event) => {
  if (!drag || !selectedTurn) return;
  const rect = overlayCanvas.getBoundingClientRect();
  const x = (event.clientX - rect.left) / canvasScale;
  const y = (event.clientY - rect.top) / canvasScale;
  const moved = applyDrag(drag, x, y, selectedTurn.layout.frame);
  const base = entriesOnCanvas().map((entry) =>
    entry.id === drag!.id ? { ...entry, box: moved } : entry,
  );
  editedEntries = base;
  redrawOverlay();
});

overlayCanvas.addEventListener('pointerup', () => {
  drag = null;
});

applyButton.addEventListener('click', () => {
  if (!selectedTurn || !editedEntries) return;
  void controller.overrideLayout(selectedTurn.k, editedEntries).then((sent) => {
    if (sent) editedEntries = null;
  });
});

resetButton.addEventListener('click', () => {
  editedEntries = null;
  redrawOverlay();
});

void controller
  .start({})
  .then(() => controller.startPolling())
  .catch((err) => {
    statusLine.textContent = `cannot reach engine: ${err instanceof Error ? err.message : err}`;
  });

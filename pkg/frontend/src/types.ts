// JSON shapes of the engine HTTP API. The UI never mutates engine truth:
// everything here mirrors GET /session/{id}/state.

export type Box = [number, number, number, number]; // x, y, w, h

export interface Frame {
  width: number;
  height: number;
}

export interface LayoutEntry {
  description: string;
  box: Box;
  id: string;
}

export interface LayoutDoc {
  frame: Frame;
  entries: LayoutEntry[];
}

export interface AdviceDoc {
  suggestions: string[];
  compliant: boolean;
}

export interface TurnView {
  k: number;
  prompt: string;
  mode: 'generate' | 'edit';
  image_url: string;
  layout_url: string;
  layout: LayoutDoc;
  advice: AdviceDoc | null;
  diagnostics: Record<string, unknown>;
  override: boolean;
  revisions: number;
  edit_region: Box | null;
}

export interface SubjectView {
  id: string;
  name: string;
  captions: Record<string, string>;
  has_embedding: boolean;
  components: SubjectView[];
}

export interface SessionView {
  id: string;
  config: Record<string, unknown>;
  turns: TurnView[];
  subjects: SubjectView[];
}

export interface TurnRequest {
  prompt: string;
  mode?: 'generate' | 'edit';
  edit_region?: Box;
  edit_target?: string;
}

export interface Rulebook {
  max_area_frac: number;
  min_area_frac: number;
  size_spread: number;
  aspect_max: number;
  overlap_max: number;
  head_frac: number;
  head_frac_tol: number;
  touch_tol_frac: number;
  head_words: string[];
  body_words: string[];
  accessory_words: string[];
  person_words: string[];
}

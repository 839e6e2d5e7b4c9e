// Client-side view state. The session document is a verbatim mirror of the
// last API response; the only state of our own is the not-yet-submitted chip
// edits and the style drawer, and both are dropped or re-based whenever a
// fresh document arrives for a newer turn.

import type { Phase, SessionDoc, StyleDoc, TurnDoc } from './api.js';

// Plutchik wheel in canonical order; opposite emotion sits 4 steps away.
export const WHEEL = [
  'joy',
  'trust',
  'fear',
  'surprise',
  'sadness',
  'disgust',
  'anger',
  'anticipation',
] as const;

export type EmotionName = (typeof WHEEL)[number];

export interface PanelEdits {
  // which turn the edits belong to; stale edits never leak into a new turn
  turnIndex: number;
  emotions: string[];
  keywords: string[];
}

export interface SessionView {
  doc: SessionDoc;
  edits: PanelEdits | null;
  style: StyleDoc;
  busy: boolean;
  error: string | null;
}

export function currentTurn(doc: SessionDoc): TurnDoc | null {
  return doc.turns.length ? doc.turns[doc.turns.length - 1]! : null;
}

export function viewFromDoc(doc: SessionDoc): SessionView {
  return {
    doc,
    edits: null,
    style: { artist: doc.style.artist, background: doc.style.background },
    busy: false,
    error: null,
  };
}

/** Replace the mirror with a fresh document, keeping edits only while they
 *  still target the same turn. Style drawer state is ours and survives. */
export function reconcile(view: SessionView, fresh: SessionDoc): SessionView {
  const turn = currentTurn(fresh);
  const edits = view.edits && turn && view.edits.turnIndex === turn.index ? view.edits : null;
  return { ...view, doc: fresh, edits, error: null };
}

function editsFor(view: SessionView, turn: TurnDoc): PanelEdits {
  if (view.edits && view.edits.turnIndex === turn.index) return view.edits;
  return {
    turnIndex: turn.index,
    emotions: [...turn.user_emotions],
    keywords: [...turn.user_keywords],
  };
}

export function toggleEmotion(view: SessionView, name: string): SessionView {
  const turn = currentTurn(view.doc);
  if (!turn) return view;
  const edits = editsFor(view, turn);
  const emotions = edits.emotions.includes(name)
    ? edits.emotions.filter((e) => e !== name)
    : [...edits.emotions, name];
  return { ...view, edits: { ...edits, emotions } };
}

export function addKeyword(view: SessionView, word: string): SessionView {
  const turn = currentTurn(view.doc);
  const trimmed = word.trim();
  if (!turn || !trimmed) return view;
  const edits = editsFor(view, turn);
  if (edits.keywords.includes(trimmed)) return view;
  return { ...view, edits: { ...edits, keywords: [...edits.keywords, trimmed] } };
}

export function removeKeyword(view: SessionView, word: string): SessionView {
  const turn = currentTurn(view.doc);
  if (!turn) return view;
  const edits = editsFor(view, turn);
  return { ...view, edits: { ...edits, keywords: edits.keywords.filter((k) => k !== word) } };
}

export function setStyle(view: SessionView, style: StyleDoc): SessionView {
  return { ...view, style };
}

/** Chip state for the panel: what to show checked, and whether the user has
 *  drifted from the service's suggestion (drives the "edited" styling). */
export function activeEmotions(view: SessionView): string[] {
  const turn = currentTurn(view.doc);
  if (!turn) return [];
  if (view.edits && view.edits.turnIndex === turn.index) return view.edits.emotions;
  return turn.user_emotions;
}

export function activeKeywords(view: SessionView): string[] {
  const turn = currentTurn(view.doc);
  if (!turn) return [];
  if (view.edits && view.edits.turnIndex === turn.index) return view.edits.keywords;
  return turn.user_keywords;
}

export function isEdited(view: SessionView): boolean {
  const turn = currentTurn(view.doc);
  if (!turn || !view.edits || view.edits.turnIndex !== turn.index) return false;
  const same = (a: string[], b: string[]) =>
    a.length === b.length && a.every((x, i) => x === b[i]);
  return !same(view.edits.emotions, turn.user_emotions) || !same(view.edits.keywords, turn.user_keywords);
}

/** The override payload for Generate: null when untouched so the service
 *  keeps its own suggestion verbatim. */
export function overridePayload(view: SessionView): {
  keywords: string[] | null;
  emotions: string[] | null;
} {
  if (!isEdited(view)) return { keywords: null, emotions: null };
  return { keywords: view.edits!.keywords, emotions: view.edits!.emotions };
}

export function phaseAllows(phase: Phase, action: 'generate' | 'images' | 'select'): boolean {
  switch (action) {
    case 'generate':
      return phase === 'SuggestionsReady';
    case 'images':
      return phase === 'SentenceGenerated';
    case 'select':
      return phase === 'ImagesReady';
  }
}

/** Completed turns pair each story sentence after the first with its picked
 *  image; the canvas walks this. */
export interface TimelineCard {
  sentence: string;
  image: { sessionId: string; hash: string; alt: string } | null;
}

export function timeline(doc: SessionDoc): TimelineCard[] {
  const cards: TimelineCard[] = doc.story.map((sentence) => ({ sentence, image: null }));
  for (const turn of doc.turns) {
    if (turn.selected_image === null || turn.generated_sentence === null) continue;
    const image = turn.images[turn.selected_image];
    if (!image) continue;
    // turn.index is 1-based and turn k illustrates story sentence k
    const card = cards[turn.index];
    if (card) {
      card.image = { sessionId: doc.id, hash: image.hash, alt: image.prompt };
    }
  }
  return cards;
}

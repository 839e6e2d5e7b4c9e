// HTML renderers. Every function is pure string-in string-out so the same
// code drives the browser and the contract tests. Interaction is wired by
// data-action attributes that app.ts picks up through event delegation.

import type { DetectionRow, Phase } from './api.js';
import {
  activeEmotions,
  activeKeywords,
  currentTurn,
  isEdited,
  timeline,
  WHEEL,
  type SessionView,
} from './state.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function imagePath(apiBase: string, sessionId: string, hash: string): string {
  return `${apiBase.replace(/\/+$/, '')}/sessions/${encodeURIComponent(sessionId)}/images/${hash}`;
}

const PHASE_ORDER: Phase[] = [
  'AwaitingFirstSentence',
  'SuggestionsReady',
  'SentenceGenerated',
  'ImagesReady',
  'Completed',
];

const PHASE_LABELS: Record<Phase, string> = {
  AwaitingFirstSentence: 'Start',
  SuggestionsReady: 'Suggestions',
  SentenceGenerated: 'Sentence ready',
  ImagesReady: 'Pick an image',
  Completed: 'Done',
};

export function renderPhaseStrip(phase: Phase): string {
  const steps = PHASE_ORDER.map((p) => {
    const cls = p === phase ? 'phase-step current' : 'phase-step';
    return `<span class="${cls}" data-phase="${p}">${PHASE_LABELS[p]}</span>`;
  });
  return `<nav class="phase-strip" aria-label="progress">${steps.join('')}</nav>`;
}

export function renderNotFound(sessionId: string): string {
  const detail = sessionId
    ? `No session <code>${escapeHtml(sessionId)}</code> on this server.`
    : 'No session id in the URL.';
  return `<section class="not-found">
  <h1>Story not found</h1>
  <p>${detail}</p>
  <p><a href="?">Start a new story</a></p>
</section>`;
}

export function renderError(message: string): string {
  return `<div class="error-banner" role="alert">${escapeHtml(message)}</div>`;
}

/** Shown while an image URL failed to load; app.ts swaps it in. */
export function renderImagePlaceholder(src: string): string {
  return `<div class="image-placeholder">
  <span>image unavailable</span>
  <button type="button" data-action="retry-image" data-src="${escapeHtml(src)}">retry</button>
</div>`;
}

/** Timeline of the story so far: one card per sentence, each completed turn
 *  carrying its selected image. */
export function renderStoryCanvas(view: SessionView, apiBase: string): string {
  const cards = timeline(view.doc).map((card, i) => {
    const img = card.image
      ? `<img class="card-image" alt="${escapeHtml(card.image.alt)}" src="${imagePath(
          apiBase,
          card.image.sessionId,
          card.image.hash
        )}">`
      : '';
    return `<article class="sentence-card" data-sentence-index="${i}">${img}<p class="card-text">${escapeHtml(
      card.sentence
    )}</p></article>`;
  });
  return `<section class="story-canvas">${cards.join('\n')}</section>`;
}

/** All eight wheel emotions as toggles with the active set checked, plus
 *  editable keyword chips and the Generate trigger. */
export function renderSuggestionPanel(view: SessionView): string {
  const turn = currentTurn(view.doc);
  if (!turn) return '';
  const emotions = activeEmotions(view);
  const keywords = activeKeywords(view);
  const edited = isEdited(view);

  const emotionChips = WHEEL.map((name) => {
    const on = emotions.includes(name);
    const suggested = turn.suggested_emotions.includes(name);
    const cls = ['chip', 'emotion-chip', on ? 'on' : '', suggested ? 'suggested' : '']
      .filter(Boolean)
      .join(' ');
    return `<button type="button" class="${cls}" data-action="toggle-emotion" data-name="${name}" aria-pressed="${on}">${name}</button>`;
  }).join('');

  const keywordChips = keywords
    .map(
      (word) =>
        `<span class="chip keyword-chip${
          turn.suggested_keywords.includes(word) ? ' suggested' : ' added'
        }">${escapeHtml(word)}<button type="button" class="chip-remove" data-action="remove-keyword" data-word="${escapeHtml(
          word
        )}" aria-label="remove ${escapeHtml(word)}">&times;</button></span>`
    )
    .join('');

  const busy = view.busy ? ' disabled' : '';
  return `<section class="suggestion-panel${edited ? ' edited' : ''}">
  <h2>Next sentence</h2>
  <div class="chip-row" data-role="emotions">${emotionChips}</div>
  <div class="chip-row" data-role="keywords">${keywordChips}
    <form class="keyword-add" data-action="add-keyword">
      <input name="word" type="text" placeholder="add keyword" autocomplete="off">
    </form>
  </div>
  <button type="button" class="primary" data-action="generate"${busy}>Generate</button>
</section>`;
}

/** Candidate images side by side; clicking one selects it. */
export function renderImageChooser(view: SessionView, apiBase: string): string {
  const turn = currentTurn(view.doc);
  if (!turn || !turn.images.length) return '';
  const busy = view.busy ? ' disabled' : '';
  const cards = turn.images
    .map(
      (image, index) =>
        `<button type="button" class="image-card" data-action="select" data-index="${index}"${busy}>
    <img alt="${escapeHtml(image.prompt)} (candidate ${index + 1})" src="${imagePath(
      apiBase,
      view.doc.id,
      image.hash
    )}">
  </button>`
    )
    .join('\n');
  return `<section class="image-chooser">
  <h2>Choose an image</h2>
  <div class="image-row">${cards}</div>
</section>`;
}

/** Detected objects for the finished turn, one row per label in the order
 *  the service reported, bar width tracking confidence linearly. */
export function renderDetectionTable(rows: DetectionRow[]): string {
  if (!rows.length) {
    return '<p class="detection-empty">nothing detected above threshold</p>';
  }
  const body = rows
    .map((row) => {
      const width = row.confidence * 100;
      return `<tr data-item="${escapeHtml(row.item)}">
    <td class="det-item">${escapeHtml(row.item)}</td>
    <td class="det-count">${row.count}</td>
    <td class="det-bar-cell"><div class="det-track"><div class="det-bar" style="width: ${width}%"></div></div><span class="det-value">${row.confidence.toFixed(
        3
      )}</span></td>
  </tr>`;
    })
    .join('\n');
  return `<table class="detection-table">
  <thead><tr><th>item</th><th>count</th><th>confidence</th></tr></thead>
  <tbody>${body}</tbody>
</table>`;
}

export function renderStyleDrawer(view: SessionView): string {
  const { artist, background } = view.style;
  return `<details class="style-drawer">
  <summary>Image style</summary>
  <form data-action="apply-style">
    <label>Artist
      <input name="artist" type="text" value="${escapeHtml(artist ?? '')}" list="artist-presets">
    </label>
    <datalist id="artist-presets"><option value="Carl Spitzweg"></option></datalist>
    <label>Background
      <input name="background" type="text" value="${escapeHtml(background ?? '')}" list="background-presets">
    </label>
    <datalist id="background-presets"><option value="country view"></option></datalist>
    <button type="submit">Apply</button>
  </form>
</details>`;
}

export function renderNewStoryForm(busy: boolean): string {
  return `<section class="new-story">
  <h1>Start a story</h1>
  <form data-action="new-story">
    <input name="first_sentence" type="text" placeholder="First sentence" autocomplete="off">
    <button type="submit" class="primary"${busy ? ' disabled' : ''}>Begin</button>
  </form>
</section>`;
}

/** Full page for a loaded session: canvas, then whichever panel the phase
 *  calls for, then the latest detection table once a turn has finished. */
export function renderSession(view: SessionView, apiBase: string): string {
  const { doc } = view;
  const parts: string[] = [renderPhaseStrip(doc.phase)];
  if (view.error) parts.push(renderError(view.error));
  parts.push(renderStoryCanvas(view, apiBase));

  if (doc.phase === 'SuggestionsReady') {
    parts.push(renderSuggestionPanel(view));
  } else if (doc.phase === 'SentenceGenerated') {
    const sentence = currentTurn(doc)?.generated_sentence ?? '';
    parts.push(`<section class="sentence-ready">
  <p class="fresh-sentence">${escapeHtml(sentence)}</p>
  <button type="button" class="primary" data-action="images"${view.busy ? ' disabled' : ''}>Illustrate</button>
</section>`);
  } else if (doc.phase === 'ImagesReady') {
    parts.push(renderImageChooser(view, apiBase));
  } else if (doc.phase === 'Completed') {
    parts.push('<p class="completed-note">The story is complete.</p>');
  }

  // most recent finished turn's detections feed the next turn's keywords
  const summarised = [...doc.turns].reverse().find((t) => t.detection_summary !== null);
  if (summarised && doc.phase !== 'ImagesReady') {
    parts.push(`<section class="detections"><h2>Detected last turn</h2>${renderDetectionTable(
      summarised.detection_summary!
    )}</section>`);
  }

  parts.push(renderStyleDrawer(view));
  return parts.join('\n');
}

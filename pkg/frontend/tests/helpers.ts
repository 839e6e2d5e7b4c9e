// Hand-built session documents for unit tests; shapes mirror the service.

import type { SessionDoc, TurnDoc } from '../src/api.js';

export function makeTurn(overrides: Partial<TurnDoc> = {}): TurnDoc {
  return {
    index: 1,
    suggested_emotions: ['sadness'],
    suggested_keywords: ['Mary'],
    user_emotions: ['sadness'],
    user_keywords: ['Mary'],
    prompt: null,
    generated_sentence: null,
    images: [],
    selected_image: null,
    detection_summary: null,
    style: { artist: null, background: null },
    ...overrides,
  };
}

export function makeDoc(overrides: Partial<SessionDoc> = {}): SessionDoc {
  return {
    id: 'abc-123',
    schema_version: 1,
    seed: 42,
    phase: 'SuggestionsReady',
    story: ['Mary had been feeling depressed lately.'],
    style: { artist: null, background: null },
    turns: [makeTurn()],
    created_at: '2024-01-01T00:00:00+00:00',
    updated_at: '2024-01-01T00:00:00+00:00',
    options: {},
    ...overrides,
  };
}

let imageCounter = 0;

export function makeImage(prompt = 'a test prompt') {
  imageCounter += 1;
  return {
    id: `img-${imageCounter.toString(16).padStart(16, '0')}`,
    hash: imageCounter.toString(16).padStart(64, 'a'),
    prompt,
  };
}

/** A finished five-sentence session: four turns, each with three images,
 *  index 1 selected. */
export function completedDoc(): SessionDoc {
  const story = [
    'Mary had been feeling depressed lately.',
    'She decided to go see a psychiatrist.',
    'Sentence three.',
    'Sentence four.',
    'Sentence five.',
  ];
  const turns: TurnDoc[] = [];
  for (let i = 1; i <= 4; i++) {
    turns.push(
      makeTurn({
        index: i,
        generated_sentence: story[i]!,
        images: [makeImage(`${story[i]} a`), makeImage(`${story[i]} b`), makeImage(`${story[i]} c`)],
        selected_image: 1,
        detection_summary: [
          { item: 'horse', count: 5, confidence: 0.729 },
          { item: 'bird', count: 2, confidence: 0.719 },
        ],
      })
    );
  }
  return makeDoc({ phase: 'Completed', story, turns });
}

export function parseHtml(html: string): HTMLElement {
  const host = document.createElement('div');
  host.innerHTML = html;
  return host;
}

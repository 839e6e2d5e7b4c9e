// Contract test against the real service: boots `fabula serve --mock` as a
// subprocess and drives the mounted UI through a complete five-sentence
// story purely via DOM events. The finished session, fetched independently
// from the API, must match the recorded golden transcript byte for byte
// (timestamps aside). Set RECORD_GOLDEN=1 to re-record after an intended
// behaviour change.

import { spawn, type ChildProcessWithoutNullStreams } from 'node:child_process';
import { mkdirSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import type { SessionDoc } from '../src/api.js';
import { mount, type AppController } from '../src/app.js';
import { renderDetectionTable } from '../src/render.js';
import { parseHtml } from './helpers.js';

const FIRST_SENTENCE = 'Mary had been feeling depressed lately.';
// vitest runs from the frontend directory
const GOLDEN_PATH = join(process.cwd(), 'tests', 'data', 'golden_session.json');

let proc: ChildProcessWithoutNullStreams;
let baseUrl: string;
let sessionsDir: string;

beforeAll(async () => {
  sessionsDir = mkdtempSync(join(tmpdir(), 'fabula-ui-'));
  proc = spawn(
    'fabula',
    ['serve', '--mock', '--seed', '42', '--port', '0', '--sessions-dir', sessionsDir],
    { stdio: ['ignore', 'pipe', 'pipe'] }
  );
  baseUrl = await new Promise<string>((resolve, reject) => {
    let buffer = '';
    const timer = setTimeout(() => reject(new Error(`service never came up: ${buffer}`)), 30_000);
    proc.stdout.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    proc.stderr.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
    });
    proc.on('exit', (code) => reject(new Error(`service exited early (${code}): ${buffer}`)));
  });
});

afterAll(() => {
  proc?.kill('SIGTERM');
  if (sessionsDir) rmSync(sessionsDir, { recursive: true, force: true });
});

function makeRoot(): HTMLElement {
  const root = document.createElement('div');
  document.body.appendChild(root);
  return root;
}

function click(root: HTMLElement, selector: string): void {
  const el = root.querySelector<HTMLElement>(selector);
  if (!el) throw new Error(`nothing matches ${selector} in:\n${root.innerHTML}`);
  el.click();
}

function submitForm(root: HTMLElement, selector: string, values: Record<string, string>): void {
  const form = root.querySelector<HTMLFormElement>(selector);
  if (!form) throw new Error(`no form ${selector}`);
  for (const [name, value] of Object.entries(values)) {
    const input = form.elements.namedItem(name) as HTMLInputElement | null;
    if (!input) throw new Error(`no input ${name} in ${selector}`);
    input.value = value;
  }
  form.requestSubmit();
}

function stripTimestamps(doc: SessionDoc): Omit<SessionDoc, 'created_at' | 'updated_at'> {
  const { created_at: _c, updated_at: _u, ...rest } = doc;
  return rest;
}

async function fetchSession(id: string): Promise<SessionDoc> {
  const response = await fetch(`${baseUrl}/sessions/${id}`);
  expect(response.status).toBe(200);
  return (await response.json()) as SessionDoc;
}

/** One user turn: drop one emotion, add one keyword, generate, illustrate,
 *  pick candidate 1. Every move is a DOM event on the rendered page. */
async function playTurn(root: HTMLElement, app: AppController): Promise<void> {
  expect(app.view()!.doc.phase).toBe('SuggestionsReady');

  const onChip = root.querySelector<HTMLElement>('.emotion-chip.on');
  if (onChip) onChip.click();

  const hasKeyword = [...root.querySelectorAll('.keyword-chip')].some((chip) =>
    chip.textContent!.replace('×', '').trim() === 'psychiatrist'
  );
  if (!hasKeyword) {
    submitForm(root, 'form[data-action="add-keyword"]', { word: 'psychiatrist' });
  }

  click(root, '[data-action="generate"]');
  await app.idle();
  expect(app.view()!.doc.phase).toBe('SentenceGenerated');

  click(root, '[data-action="images"]');
  await app.idle();
  expect(app.view()!.doc.phase).toBe('ImagesReady');
  expect(root.querySelectorAll('[data-action="select"]')).toHaveLength(3);

  click(root, '[data-action="select"][data-index="1"]');
  await app.idle();
}

describe('full story walkthrough', () => {
  let finalDoc: SessionDoc;

  it('completes a five-sentence story through the UI alone', async () => {
    const root = makeRoot();
    const app = mount(root, { apiBase: baseUrl });
    await app.refresh();

    submitForm(root, 'form[data-action="new-story"]', { first_sentence: FIRST_SENTENCE });
    await app.idle();
    expect(app.view()).not.toBeNull();
    expect(app.view()!.doc.phase).toBe('SuggestionsReady');
    expect(app.view()!.doc.story).toEqual([FIRST_SENTENCE]);

    for (let turn = 0; turn < 4; turn++) {
      await playTurn(root, app);
    }

    const view = app.view()!;
    expect(view.doc.phase).toBe('Completed');
    expect(view.doc.story).toHaveLength(5);
    expect(root.querySelectorAll('.sentence-card')).toHaveLength(5);
    // every completed turn shows its picked image on the canvas
    expect(root.querySelectorAll('.sentence-card img')).toHaveLength(4);
    for (const turn of view.doc.turns) {
      expect(turn.selected_image).toBe(1);
    }

    finalDoc = await fetchSession(view.doc.id);
    app.dispose();
  });

  it('matches the recorded golden transcript', () => {
    expect(finalDoc).toBeDefined();
    const stripped = stripTimestamps(finalDoc);
    if (process.env.RECORD_GOLDEN) {
      mkdirSync(dirname(GOLDEN_PATH), { recursive: true });
      writeFileSync(GOLDEN_PATH, JSON.stringify(stripped, null, 2) + '\n');
      console.log(`recorded golden transcript to ${GOLDEN_PATH}`);
      return;
    }
    const golden = JSON.parse(readFileSync(GOLDEN_PATH, 'utf-8'));
    expect(stripped).toEqual(golden);
  });

  it('renders detection rows in API order with linear bar widths', () => {
    expect(finalDoc).toBeDefined();
    let turnsChecked = 0;
    for (const turn of finalDoc.turns) {
      if (!turn.detection_summary) continue;
      turnsChecked += 1;
      const host = parseHtml(renderDetectionTable(turn.detection_summary));
      const rows = [...host.querySelectorAll('tbody tr')];
      expect(rows.map((tr) => tr.getAttribute('data-item'))).toEqual(
        turn.detection_summary.map((r) => r.item)
      );
      rows.forEach((tr, i) => {
        const bar = tr.querySelector<HTMLElement>('.det-bar')!;
        const width = parseFloat(bar.style.width);
        const confidence = turn.detection_summary![i]!.confidence;
        expect(bar.style.width.endsWith('%')).toBe(true);
        // a one-pixel tolerance on a 200px track
        expect(Math.abs((width / 100) * 200 - confidence * 200)).toBeLessThanOrEqual(1);
      });
    }
    expect(turnsChecked).toBe(4);
  });

  it('serves the selected images as real PNG bytes', async () => {
    expect(finalDoc).toBeDefined();
    const turn = finalDoc.turns[0]!;
    const image = turn.images[turn.selected_image!]!;
    const response = await fetch(`${baseUrl}/sessions/${finalDoc.id}/images/${image.hash}`);
    expect(response.status).toBe(200);
    expect(response.headers.get('content-type')).toBe('image/png');
    const bytes = new Uint8Array(await response.arrayBuffer());
    expect([...bytes.slice(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  });
});

describe('client-side guards', () => {
  it('a double click cannot double-generate', async () => {
    const root = makeRoot();
    const app = mount(root, { apiBase: baseUrl });
    await app.refresh();
    submitForm(root, 'form[data-action="new-story"]', {
      first_sentence: 'The dog barked at dawn.',
    });
    await app.idle();
    const id = app.view()!.doc.id;

    // the first click re-renders the panel with a disabled button, so the
    // second click (re-queried, as a browser would hit it) must be inert
    root.querySelector<HTMLElement>('[data-action="generate"]')!.click();
    root.querySelector<HTMLElement>('[data-action="generate"]')?.click();
    await app.idle();

    expect(app.view()!.doc.story).toHaveLength(2);
    const fromApi = await fetchSession(id);
    expect(fromApi.story).toHaveLength(2);
    expect(fromApi.phase).toBe('SentenceGenerated');
    app.dispose();
  });

  it('recovers from a conflict by reloading the session', async () => {
    const root = makeRoot();
    const app = mount(root, { apiBase: baseUrl });
    await app.refresh();
    submitForm(root, 'form[data-action="new-story"]', {
      first_sentence: 'A quiet morning on the pier.',
    });
    await app.idle();
    const id = app.view()!.doc.id;

    // someone else advances the session behind the UI's back
    const direct = await fetch(`${baseUrl}/sessions/${id}/generate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: '{}',
    });
    expect(direct.status).toBe(200);

    click(root, '[data-action="generate"]');
    await app.idle();

    // the stale generate hit invalid_state and the view caught up
    expect(app.view()!.doc.phase).toBe('SentenceGenerated');
    expect(app.view()!.doc.story).toHaveLength(2);
    app.dispose();
  });

  it('shows the not-found screen for an unknown session id', async () => {
    const root = makeRoot();
    const app = mount(root, {
      apiBase: baseUrl,
      sessionId: '00000000-0000-0000-0000-000000000000',
    });
    await app.refresh();
    expect(root.querySelector('.not-found')).not.toBeNull();
    expect(root.textContent).toContain('00000000-0000-0000-0000-000000000000');
    app.dispose();
  });
});

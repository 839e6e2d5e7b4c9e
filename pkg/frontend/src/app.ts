// Browser controller: owns one SessionView, renders into a root element, and
// turns DOM events into API calls. All story content on screen comes from
// the service; this file only moves documents around.

import { ApiClient, ApiError, type SessionDoc, type StyleDoc } from './api.js';
import {
  addKeyword,
  overridePayload,
  reconcile,
  removeKeyword,
  setStyle,
  toggleEmotion,
  viewFromDoc,
  type SessionView,
} from './state.js';
import {
  renderImagePlaceholder,
  renderNewStoryForm,
  renderNotFound,
  renderSession,
} from './render.js';

const POLL_MS = 1000;

export interface AppOptions {
  apiBase: string;
  sessionId?: string;
}

export interface AppController {
  refresh(): Promise<void>;
  idle(): Promise<void>;
  view(): SessionView | null;
  dispose(): void;
}

export function mount(root: HTMLElement, options: AppOptions): AppController {
  const api = new ApiClient(options.apiBase);
  let view: SessionView | null = null;
  let notFoundId: string | null = null;
  let disposed = false;

  // one in-flight mutation per session; double clicks land here and bounce
  let inFlight: Promise<void> | null = null;
  let pollTimer: ReturnType<typeof setInterval> | null = null;

  function render(): void {
    if (disposed) return;
    if (notFoundId !== null) {
      root.innerHTML = renderNotFound(notFoundId);
      return;
    }
    if (!view) {
      root.innerHTML = renderNewStoryForm(inFlight !== null);
      return;
    }
    root.innerHTML = renderSession(view, options.apiBase);
  }

  function adopt(doc: SessionDoc): void {
    view = view ? reconcile(view, doc) : viewFromDoc(doc);
    notFoundId = null;
    render();
  }

  function update(next: SessionView): void {
    view = next;
    render();
  }

  async function refresh(): Promise<void> {
    const id = view?.doc.id ?? options.sessionId;
    if (!id) {
      render();
      return;
    }
    try {
      adopt(await api.getSession(id));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        notFoundId = id;
        view = null;
        render();
        return;
      }
      throw error;
    }
  }

  function startPolling(): void {
    if (pollTimer !== null) return;
    pollTimer = setInterval(() => {
      // reads may overlap the pending mutation; reconcile keeps local edits
      if (view && inFlight) {
        api
          .getSession(view.doc.id)
          .then((doc) => {
            if (inFlight) adopt(doc);
          })
          .catch(() => undefined);
      }
    }, POLL_MS);
  }

  function stopPolling(): void {
    if (pollTimer !== null) {
      clearInterval(pollTimer);
      pollTimer = null;
    }
  }

  function runMutation(work: () => Promise<SessionDoc>): void {
    if (inFlight || disposed) return;
    if (view) update({ ...view, busy: true, error: null });
    startPolling();
    inFlight = (async () => {
      try {
        const doc = await work();
        adopt(doc);
      } catch (error) {
        if (error instanceof ApiError && (error.status === 409 || error.code === 'invalid_state')) {
          // someone else moved the session; drop local edits, show the truth
          const id = view?.doc.id ?? options.sessionId;
          if (id) {
            try {
              view = viewFromDoc(await api.getSession(id));
              notFoundId = null;
              render();
            } catch {
              // keep the stale view rather than blanking the page
            }
          }
        } else if (view) {
          update({ ...view, error: error instanceof Error ? error.message : String(error) });
        }
      } finally {
        inFlight = null;
        stopPolling();
        if (view && view.busy) update({ ...view, busy: false });
      }
    })();
  }

  function onClick(event: Event): void {
    const target = (event.target as HTMLElement).closest<HTMLElement>('[data-action]');
    if (!target || !root.contains(target)) return;
    const action = target.dataset.action;
    if (action === 'toggle-emotion' && view) {
      update(toggleEmotion(view, target.dataset.name ?? ''));
    } else if (action === 'remove-keyword' && view) {
      update(removeKeyword(view, target.dataset.word ?? ''));
    } else if (action === 'generate' && view) {
      const current = view;
      const payload = overridePayload(current);
      runMutation(async () => {
        if (payload.keywords !== null || payload.emotions !== null) {
          await api.override(current.doc.id, payload.keywords, payload.emotions);
        }
        return api.generate(current.doc.id);
      });
    } else if (action === 'images' && view) {
      const current = view;
      const style = current.style.artist || current.style.background ? current.style : undefined;
      runMutation(() => api.requestImages(current.doc.id, style));
    } else if (action === 'select' && view) {
      const current = view;
      const index = Number(target.dataset.index);
      runMutation(() => api.selectImage(current.doc.id, index));
    } else if (action === 'retry-image') {
      const src = target.dataset.src ?? '';
      const holder = target.closest('.image-placeholder');
      if (holder && src) {
        const img = holder.ownerDocument.createElement('img');
        img.className = 'card-image';
        img.src = src;
        holder.replaceWith(img);
      }
    }
  }

  function onSubmit(event: Event): void {
    const form = (event.target as HTMLElement).closest<HTMLFormElement>('form[data-action]');
    if (!form || !root.contains(form)) return;
    event.preventDefault();
    const action = form.dataset.action;
    if (action === 'add-keyword' && view) {
      const input = form.elements.namedItem('word') as HTMLInputElement | null;
      if (input && input.value.trim()) {
        update(addKeyword(view, input.value));
      }
    } else if (action === 'apply-style' && view) {
      const artist = (form.elements.namedItem('artist') as HTMLInputElement | null)?.value.trim();
      const background = (
        form.elements.namedItem('background') as HTMLInputElement | null
      )?.value.trim();
      const style: StyleDoc = { artist: artist || null, background: background || null };
      update(setStyle(view, style));
    } else if (action === 'new-story') {
      const input = form.elements.namedItem('first_sentence') as HTMLInputElement | null;
      const first = input?.value.trim();
      if (first) {
        runMutation(() => api.createSession(first));
      }
    }
  }

  // img error events do not bubble; catch them in the capture phase and
  // swap in a placeholder that offers a retry
  function onImageError(event: Event): void {
    const img = event.target as HTMLElement;
    if (img.tagName !== 'IMG' || !root.contains(img)) return;
    const src = img.getAttribute('src') ?? '';
    const holder = img.ownerDocument.createElement('div');
    holder.innerHTML = renderImagePlaceholder(src);
    img.replaceWith(holder.firstElementChild!);
  }

  root.addEventListener('click', onClick);
  root.addEventListener('submit', onSubmit);
  root.addEventListener('error', onImageError, true);

  const controller: AppController = {
    refresh,
    async idle() {
      while (inFlight) {
        await inFlight;
      }
    },
    view: () => view,
    dispose() {
      disposed = true;
      stopPolling();
      root.removeEventListener('click', onClick);
      root.removeEventListener('submit', onSubmit);
      root.removeEventListener('error', onImageError, true);
    },
  };

  void refresh();
  return controller;
}

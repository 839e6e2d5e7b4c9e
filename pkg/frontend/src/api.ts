// Wire types and HTTP client for the story service. Every shape here mirrors
// a service response verbatim; nothing is computed client-side.

export type Phase =
  | 'AwaitingFirstSentence'
  | 'SuggestionsReady'
  | 'SentenceGenerated'
  | 'ImagesReady'
  | 'Completed';

export interface StyleDoc {
  artist: string | null;
  background: string | null;
}

export interface ImageDoc {
  id: string;
  hash: string;
  prompt: string;
}

export interface DetectionRow {
  item: string;
  count: number;
  confidence: number;
}

export interface TurnDoc {
  index: number;
  suggested_emotions: string[];
  suggested_keywords: string[];
  user_emotions: string[];
  user_keywords: string[];
  prompt: string | null;
  generated_sentence: string | null;
  images: ImageDoc[];
  selected_image: number | null;
  detection_summary: DetectionRow[] | null;
  style: StyleDoc;
}

export interface SessionDoc {
  id: string;
  schema_version: number;
  seed: number;
  phase: Phase;
  story: string[];
  style: StyleDoc;
  turns: TurnDoc[];
  created_at: string;
  updated_at: string;
  options: Record<string, unknown>;
}

export interface SessionListRow {
  id: string;
  phase: Phase;
  sentences: number;
  updated_at: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export function createIdempotencyKey(prefix: string): string {
  if (typeof crypto !== 'undefined' && typeof crypto.randomUUID === 'function') {
    return `${prefix}-${crypto.randomUUID()}`;
  }
  return `${prefix}-${Date.now()}-${Math.random().toString(36).slice(2, 10)}`;
}

async function parseError(response: Response): Promise<ApiError> {
  let code = 'unknown';
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  // POSTs carry an idempotency key; a retry after a network failure reuses
  // the same key so the service replays instead of repeating the mutation.
  private async post<T>(path: string, payload: unknown, keyPrefix: string): Promise<T> {
    const idempotencyKey = createIdempotencyKey(keyPrefix);
    const body = JSON.stringify(payload);

    let lastError: unknown;
    for (let attempt = 0; attempt < 2; attempt++) {
      let response: Response;
      try {
        response = await fetch(`${this.baseUrl}${path}`, {
          method: 'POST',
          headers: {
            'Content-Type': 'application/json',
            'Idempotency-Key': idempotencyKey,
          },
          body,
        });
      } catch (error) {
        lastError = error;
        continue;
      }
      if (!response.ok) throw await parseError(response);
      return (await response.json()) as T;
    }
    throw lastError instanceof Error ? lastError : new Error('request failed');
  }

  health(): Promise<{ status: string }> {
    return this.get('/healthz');
  }

  listSessions(): Promise<{ sessions: SessionListRow[] }> {
    return this.get('/sessions');
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.get(`/sessions/${encodeURIComponent(id)}`);
  }

  createSession(firstSentence: string, seed?: number, style?: StyleDoc): Promise<SessionDoc> {
    const payload: Record<string, unknown> = { first_sentence: firstSentence };
    if (seed !== undefined) payload.seed = seed;
    if (style !== undefined) payload.style = style;
    return this.post('/sessions', payload, 'create');
  }

  override(id: string, keywords: string[] | null, emotions: string[] | null): Promise<SessionDoc> {
    const payload: Record<string, unknown> = {};
    if (keywords !== null) payload.keywords = keywords;
    if (emotions !== null) payload.emotions = emotions;
    return this.post(`/sessions/${encodeURIComponent(id)}/override`, payload, 'override');
  }

  generate(id: string): Promise<SessionDoc> {
    return this.post(`/sessions/${encodeURIComponent(id)}/generate`, {}, 'generate');
  }

  requestImages(id: string, style?: StyleDoc): Promise<SessionDoc> {
    const payload: Record<string, unknown> = {};
    if (style) {
      payload.artist = style.artist;
      payload.background = style.background;
    }
    return this.post(`/sessions/${encodeURIComponent(id)}/images`, payload, 'images');
  }

  selectImage(id: string, index: number): Promise<SessionDoc> {
    return this.post(`/sessions/${encodeURIComponent(id)}/select`, { index }, 'select');
  }

  imageUrl(sessionId: string, hash: string): string {
    return `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/images/${hash}`;
  }
}

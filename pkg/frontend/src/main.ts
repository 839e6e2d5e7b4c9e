// Browser entry: wires mount() to the page URL. ?session=<id> opens an
// existing story; ?api=<base> points at a service on another origin.

import { mount } from './app.js';

const params = new URLSearchParams(window.location.search);
const root = document.getElementById('app');
if (root) {
  mount(root, {
    apiBase: params.get('api') ?? '',
    sessionId: params.get('session') ?? undefined,
  });
}

import { ReviewApi } from './api.js';
import { bindKeys } from './keyboard.js';
import { LocalOutboxStorage, Outbox } from './outbox.js';
import { ReviewSession } from './session.js';
import { render } from './view.js';

export function boot(root: HTMLElement): ReviewSession {
  const api = new ReviewApi();
  const outbox = new Outbox(api, new LocalOutboxStorage());
  const session = new ReviewSession(api, outbox, {
    onChange: () => render(session, api, root),
  });
  bindKeys(session, document);
  window.addEventListener('online', () => void session.reconnect());
  void session.load().then(() => void session.reconnect());
  return session;
}

const rootEl = document.getElementById('app');
if (rootEl) boot(rootEl);

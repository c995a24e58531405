import { ReviewApi } from './api.js';
import { ReviewSession } from './session.js';

export interface ViewElements {
  root: HTMLElement;
}

function el(tag: string, cls: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Re-render the whole app from session state (small queues, no vdom needed). */
export function render(session: ReviewSession, api: ReviewApi, root: HTMLElement): void {
  root.textContent = '';

  const header = el('header', 'topbar');
  header.appendChild(el('span', 'title', 'candidate review'));
  header.appendChild(el(
    'span', 'progress',
    `${session.reviewedCount} reviewed · ${session.queue.length - session.cursor} left` +
      (session.outbox.size > 0 ? ` · ${session.outbox.size} queued offline` : ''),
  ));
  root.appendChild(header);

  if (session.notice) {
    const banner = el('div', 'banner', session.notice);
    banner.setAttribute('data-role', 'notice');
    root.appendChild(banner);
  }

  const cand = session.current;
  if (!cand) {
    root.appendChild(el('main', 'done', 'queue drained — nothing pending'));
    return;
  }

  const main = el('main', 'stage');
  const img = document.createElement('img');
  img.className = 'frame';
  img.alt = `${cand.candidate_id} frame ${session.frameIndex}`;
  img.src = session.frameUrl() ?? '';
  main.appendChild(img);

  const strip = el('div', 'filmstrip');
  for (let i = 0; i < cand.frame_count; i++) {
    const thumb = document.createElement('img');
    thumb.className = i === session.frameIndex ? 'thumb focused' : 'thumb';
    thumb.src = api.frameUrl(cand.candidate_id, i, false);
    thumb.alt = `frame ${i}`;
    strip.appendChild(thumb);
  }
  main.appendChild(strip);
  root.appendChild(main);

  const panel = el('aside', 'panel');
  panel.appendChild(el('h2', 'panel-title', cand.candidate_id));
  panel.appendChild(el('div', 'meta',
    `${cand.strategy} · ${cand.frame_count} frames · overlay ${session.overlay ? 'on' : 'off'}`));
  const checks = el('dl', 'checks');
  for (const [rule, value] of Object.entries(cand.checks)) {
    checks.appendChild(el('dt', 'check-name', rule));
    checks.appendChild(el('dd', 'check-value', value.toFixed(4)));
  }
  panel.appendChild(checks);
  panel.appendChild(el('div', 'hint', 'a accept · r reject · m overlay · ←/→ scrub'));
  root.appendChild(panel);
}

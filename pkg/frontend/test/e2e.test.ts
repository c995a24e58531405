// End-to-end in jsdom: real components wired together against the fake
// service; only the transport is injected. Keyboard events drive the whole
// review flow the way a browser session would.
import { beforeEach, describe, expect, it } from 'vitest';

import { ReviewApi } from '../src/api';
import { bindKeys } from '../src/keyboard';
import { MemoryOutboxStorage, Outbox } from '../src/outbox';
import { ReviewSession } from '../src/session';
import { render } from '../src/view';
import { FakeService, makeCandidates } from './fake-service';

function key(k: string): void {
  document.dispatchEvent(new KeyboardEvent('keydown', { key: k, bubbles: true, cancelable: true }));
}

function bootApp(service: FakeService) {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById('app') as HTMLElement;
  const api = new ReviewApi(service.fetch);
  const outbox = new Outbox(api, new MemoryOutboxStorage());
  const session = new ReviewSession(api, outbox, {
    onChange: () => render(session, api, root),
  });
  const unbind = bindKeys(session, document);
  return { session, root, api, unbind };
}

describe('keyboard review end to end', () => {
  let teardown: (() => void) | null = null;

  beforeEach(() => {
    teardown?.();
    teardown = null;
  });

  it('reviews 10 candidates by keyboard; the log matches the keystrokes', async () => {
    const service = new FakeService(makeCandidates(10));
    const { session, root, unbind } = bootApp(service);
    teardown = unbind;
    await session.load();

    expect(root.querySelectorAll('.thumb')).toHaveLength(4);
    expect(root.querySelector('.panel-title')?.textContent).toBe('cand000');

    const keystrokes = ['a', 'r', 'a', 'a', 'r', 'a', 'r', 'r', 'a', 'a'];
    for (const k of keystrokes) {
      key(k);
    }
    await session.flush();

    // exactly 10 decisions, in keystroke order, one POST per candidate
    expect(service.log).toHaveLength(10);
    expect(service.log.map((e) => e.verdict)).toEqual(
      keystrokes.map((k) => (k === 'a' ? 'accept' : 'reject')));
    expect(service.log.map((e) => e.candidate_id)).toEqual(
      makeCandidates(10).map((c) => c.candidate_id));

    expect(session.current).toBeNull();
    expect(root.querySelector('.done')?.textContent).toContain('queue drained');
    expect(service.pendingIds()).toEqual([]);
  });

  it('scrubbing and overlay keys update the rendered frame', async () => {
    const service = new FakeService(makeCandidates(2));
    const { session, root, unbind } = bootApp(service);
    teardown = unbind;
    await session.load();

    key('ArrowRight');
    key('ArrowRight');
    expect(session.frameIndex).toBe(2);
    let img = root.querySelector('img.frame') as HTMLImageElement;
    expect(img.src).toContain('/frames/2?overlay=none');

    key('m');
    img = root.querySelector('img.frame') as HTMLImageElement;
    expect(img.src).toContain('overlay=mask');

    key('ArrowLeft');
    expect(session.frameIndex).toBe(1);
  });

  it('offline decisions replay exactly once on reconnect', async () => {
    const service = new FakeService(makeCandidates(3));
    const { session, root, unbind } = bootApp(service);
    teardown = unbind;
    await session.load();

    key('a');
    await session.flush();
    expect(service.log).toHaveLength(1);

    service.offline = true;
    key('r');
    key('a');
    await session.flush();
    expect(service.log).toHaveLength(1);
    expect(session.outbox.size).toBe(2);
    expect(root.querySelector('[data-role="notice"]')?.textContent).toContain('offline');

    service.offline = false;
    await session.reconnect();
    await session.reconnect(); // a second reconnect must not duplicate anything

    expect(service.log).toHaveLength(3);
    expect(service.log.map((e) => e.verdict)).toEqual(['accept', 'reject', 'accept']);
    const ids = service.log.map((e) => e.decision_id);
    expect(new Set(ids).size).toBe(ids.length);
    expect(session.outbox.size).toBe(0);
  });

  it('renders the measurements panel straight from the API payload', async () => {
    const service = new FakeService(makeCandidates(1));
    const { session, root, unbind } = bootApp(service);
    teardown = unbind;
    await session.load();
    const names = [...root.querySelectorAll('.check-name')].map((n) => n.textContent);
    expect(names).toEqual(['touches_boundary', 'too_many_holes']);
    const values = [...root.querySelectorAll('.check-value')].map((n) => n.textContent);
    expect(values).toEqual(['9.0000', '0.0000']);
  });
});

import { ReviewSession } from './session.js';

/**
 * a = accept, r = reject, m = mask overlay toggle,
 * arrows = frame scrub, home/end = first/last frame.
 */
export function bindKeys(session: ReviewSession, target: EventTarget): () => void {
  const handler = (ev: Event) => {
    const e = ev as KeyboardEvent;
    if (e.defaultPrevented) return;
    const tag = (e.target as HTMLElement | null)?.tagName;
    if (tag === 'INPUT' || tag === 'TEXTAREA') return;
    switch (e.key) {
      case 'a':
        session.decide('accept');
        break;
      case 'r':
        session.decide('reject', 'bad_mask');
        break;
      case 'm':
        session.toggleOverlay();
        break;
      case 'ArrowRight':
        session.scrub(1);
        break;
      case 'ArrowLeft':
        session.scrub(-1);
        break;
      case 'Home':
        session.scrub(-Infinity);
        break;
      case 'End':
        session.scrub(Infinity);
        break;
      default:
        return;
    }
    e.preventDefault();
  };
  target.addEventListener('keydown', handler);
  return () => target.removeEventListener('keydown', handler);
}

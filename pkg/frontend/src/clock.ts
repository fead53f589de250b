/**
 * Session timestamps, guaranteed strictly increasing.
 *
 * The engine rejects any input whose timestamp does not move forward, and a
 * wall clock is allowed to jump backwards (NTP sync, DST weirdness), so every
 * timestamp sent during a session comes through this guard.
 */
export class SessionClock {
  private last = 0;

  constructor(private readonly source: () => number = Date.now) {}

  now(): number {
    const t = Math.max(this.source(), this.last + 1);
    this.last = t;
    return t;
  }
}

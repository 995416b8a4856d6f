// Session state with optimistic local echo.
//
// Clicks render immediately as pending entries keyed by a client nonce;
// the server's pushed dialogue (which echoes the nonce) settles the entry
// in place. The store never computes step state itself: step and counters
// only ever come from server payloads.

import type { DialogueOut, StepInfoOut, TrackerStateOut } from "./api.js";

export interface Entry {
  time: string | null;
  speaker: string;
  text: string;
  nonce: string | null;
  pending: boolean;
}

export function lineOf(entry: { time: string | null; speaker: string; text: string }): string {
  return `${entry.time} - ${entry.speaker}: ${entry.text}`;
}

export class SessionStore {
  entries: Entry[] = [];
  step: StepInfoOut | null = null;
  state: TrackerStateOut | null = null;
  banner: string | null = null;
  latencies: number[] = [];
  private listeners: Array<() => void> = [];

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  optimistic(speaker: string, text: string, nonce: string): void {
    this.entries.push({ time: null, speaker, text, nonce, pending: true });
    this.emit();
  }

  settle(dialogue: DialogueOut): void {
    if (dialogue.nonce) {
      const pending = this.entries.find((e) => e.pending && e.nonce === dialogue.nonce);
      if (pending) {
        pending.time = dialogue.time;
        pending.speaker = dialogue.speaker;
        pending.text = dialogue.text;
        pending.pending = false;
        this.emit();
        return;
      }
    }
    // the POST response and the stream can both deliver the same line
    const duplicate = this.entries.some(
      (e) =>
        !e.pending &&
        e.time === dialogue.time &&
        e.speaker === dialogue.speaker &&
        e.text === dialogue.text,
    );
    if (duplicate) return;
    this.entries.push({
      time: dialogue.time,
      speaker: dialogue.speaker,
      text: dialogue.text,
      nonce: dialogue.nonce ?? null,
      pending: false,
    });
    this.emit();
  }

  reject(nonce: string, message: string): void {
    this.entries = this.entries.filter((e) => !(e.pending && e.nonce === nonce));
    this.banner = message;
    this.emit();
  }

  setBanner(message: string | null): void {
    this.banner = message;
    this.emit();
  }

  applyStep(step: StepInfoOut): void {
    this.step = step;
    this.emit();
  }

  applyState(state: TrackerStateOut): void {
    this.state = state;
    this.emit();
  }

  recordLatency(seconds: number): void {
    this.latencies.push(seconds);
    this.emit();
  }

  get lastLatency(): number | null {
    return this.latencies.length ? this.latencies[this.latencies.length - 1]! : null;
  }

  get meanLatency(): number | null {
    if (!this.latencies.length) return null;
    return this.latencies.reduce((a, b) => a + b, 0) / this.latencies.length;
  }

  get pendingCount(): number {
    return this.entries.filter((e) => e.pending).length;
  }

  transcriptLines(): string[] {
    return this.entries.filter((e) => !e.pending).map(lineOf);
  }
}

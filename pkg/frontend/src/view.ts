// DOM rendering. The transcript list, step panel, activity palette, and
// latency readout all repaint from the store; nothing here computes task
// state locally.

import type { TaskOut } from "./api.js";
import { lineOf, SessionStore } from "./store.js";

export interface ViewHandlers {
  onActivity(activity: string): void;
  onComment(text: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

export class ConsoleView {
  private list!: HTMLUListElement;
  private stepEl!: HTMLElement;
  private countersEl!: HTMLElement;
  private mistakesEl!: HTMLElement;
  private latencyEl!: HTMLElement;
  private bannerEl!: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly store: SessionStore,
    private readonly handlers: ViewHandlers,
  ) {}

  mount(task: TaskOut): void {
    this.root.innerHTML = "";

    const panel = el("div", "step-panel");
    this.stepEl = el("div", "step-note");
    this.countersEl = el("div", "counters");
    this.mistakesEl = el("div", "mistakes");
    panel.append(this.stepEl, this.countersEl, this.mistakesEl);

    this.bannerEl = el("div", "banner hidden");
    this.list = el("ul", "transcript");
    this.latencyEl = el("div", "latency");

    const palette = el("div", "palette");
    for (const activity of task.activities) {
      const button = el("button", "activity");
      button.type = "button";
      button.dataset.activity = activity;
      button.textContent = activity;
      button.addEventListener("click", () => this.handlers.onActivity(activity));
      palette.appendChild(button);
    }

    const form = el("form", "comment-form");
    const input = el("input", "comment-input");
    input.type = "text";
    input.placeholder = "Say something to the assistant";
    const send = el("button", "comment-send");
    send.type = "submit";
    send.textContent = "Send";
    form.append(input, send);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = input.value.trim();
      if (!text) return;
      input.value = "";
      this.handlers.onComment(text);
    });

    this.root.append(panel, this.bannerEl, this.list, palette, form, this.latencyEl);
    this.store.onChange(() => this.render());
    this.render();
  }

  render(): void {
    this.list.innerHTML = "";
    for (const entry of this.store.entries) {
      const item = document.createElement("li");
      item.className = `line ${entry.speaker.toLowerCase()}${entry.pending ? " pending" : ""}`;
      item.textContent = entry.pending
        ? `… - ${entry.speaker}: ${entry.text}`
        : lineOf(entry);
      this.list.appendChild(item);
    }

    const step = this.store.step;
    this.stepEl.textContent = step ? `Step ${step.step_id}: ${step.step_note}` : "no session";

    const state = this.store.state;
    this.countersEl.textContent = state
      ? `frames ${state.frames_placed}/4 · frame screws ${state.frame_screws}/8 · ` +
        `leg screws ${state.leg_screws}/4 · drilled ${state.drilled}/12`
      : "";
    this.mistakesEl.textContent = state?.mistakes.length
      ? `mistakes: ${state.mistakes.map((m) => `${m.kind} @ ${m.time}`).join(", ")}`
      : "";
    this.mistakesEl.classList.toggle("active", Boolean(state?.mistakes.length));

    const last = this.store.lastLatency;
    const mean = this.store.meanLatency;
    this.latencyEl.textContent =
      last === null || mean === null
        ? ""
        : `response time: last ${last.toFixed(3)}s · mean ${mean.toFixed(3)}s`;

    this.bannerEl.textContent = this.store.banner ?? "";
    this.bannerEl.classList.toggle("hidden", this.store.banner === null);
  }

  // Settled transcript as rendered, one line per list item.
  transcriptText(): string[] {
    return Array.from(this.list.querySelectorAll("li"))
      .filter((item) => !item.classList.contains("pending"))
      .map((item) => item.textContent ?? "");
  }
}

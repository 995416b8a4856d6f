// Browser entry point: start form, then a live console view.

import { Client } from "./api.js";
import { Controller } from "./controller.js";
import { SessionStore } from "./store.js";
import { ConsoleView } from "./view.js";

function startForm(root: HTMLElement, onStart: (base: string, backend: string) => void): void {
  const form = document.createElement("form");
  form.className = "start-form";
  form.innerHTML = `
    <label>Server <input name="base" type="text" value="http://127.0.0.1:8400" /></label>
    <label>Backend
      <select name="backend">
        <option value="oracle">oracle</option>
        <option value="oracle-answers">oracle-answers</option>
        <option value="chatty">chatty</option>
        <option value="remote">remote</option>
      </select>
    </label>
    <button type="submit">Start session</button>
    <div class="start-error hidden"></div>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    onStart(String(data.get("base")), String(data.get("backend")));
  });
  root.appendChild(form);
}

export async function boot(root: HTMLElement): Promise<void> {
  startForm(root, async (base, backend) => {
    const errorEl = root.querySelector(".start-error") as HTMLElement;
    const client = new Client(base);
    const store = new SessionStore();
    const controller = new Controller(client, store);
    try {
      const task = await client.task();
      await controller.start({ backend });
      const view = new ConsoleView(root, store, {
        onActivity: (activity) => void controller.emitActivity(activity),
        onComment: (text) => void controller.sendComment(text),
      });
      view.mount(task);
    } catch (err) {
      errorEl.textContent = `could not start: ${err instanceof Error ? err.message : err}`;
      errorEl.classList.remove("hidden");
    }
  });
}

const appRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (appRoot) {
  void boot(appRoot);
}

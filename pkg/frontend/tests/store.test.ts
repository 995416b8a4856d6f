import { beforeEach, describe, expect, it } from "vitest";

import { SessionStore } from "../src/store.js";

describe("SessionStore", () => {
  let store: SessionStore;

  beforeEach(() => {
    store = new SessionStore();
  });

  it("renders optimistic entries as pending", () => {
    store.optimistic("Wearable", "sand", "n1");
    expect(store.entries).toHaveLength(1);
    expect(store.entries[0]!.pending).toBe(true);
    expect(store.entries[0]!.time).toBeNull();
    expect(store.transcriptLines()).toEqual([]);
  });

  it("settles a pending entry in place when the nonce echoes back", () => {
    store.optimistic("Wearable", "sand", "n1");
    store.settle({ time: "09:00:05 AM", speaker: "Wearable", text: "sand", nonce: "n1" });
    expect(store.entries).toHaveLength(1);
    expect(store.entries[0]).toMatchObject({
      time: "09:00:05 AM",
      pending: false,
    });
    expect(store.transcriptLines()).toEqual(["09:00:05 AM - Wearable: sand"]);
  });

  it("keeps transcript order when settle interleaves with later optimism", () => {
    store.optimistic("Wearable", "sand", "n1");
    store.optimistic("User", "done?", "n2");
    store.settle({ time: "09:00:05 AM", speaker: "Wearable", text: "sand", nonce: "n1" });
    expect(store.entries.map((e) => e.pending)).toEqual([false, true]);
    expect(store.entries.map((e) => e.speaker)).toEqual(["Wearable", "User"]);
  });

  it("appends server-originated dialogues", () => {
    store.settle({ time: "09:00:06 AM", speaker: "Assistant", text: "Now sand it." });
    expect(store.transcriptLines()).toEqual(["09:00:06 AM - Assistant: Now sand it."]);
  });

  it("drops exact duplicates delivered by both response and stream", () => {
    const line = { time: "09:00:06 AM", speaker: "Assistant", text: "Now sand it." };
    store.settle(line);
    store.settle(line);
    expect(store.entries).toHaveLength(1);
  });

  it("removes the optimistic entry and raises a banner on reject", () => {
    store.optimistic("Wearable", "juggle", "n9");
    store.reject("n9", "event rejected: unknown activity");
    expect(store.entries).toHaveLength(0);
    expect(store.banner).toContain("unknown activity");
  });

  it("tracks last and mean latency", () => {
    expect(store.lastLatency).toBeNull();
    expect(store.meanLatency).toBeNull();
    store.recordLatency(0.2);
    store.recordLatency(0.4);
    expect(store.lastLatency).toBeCloseTo(0.4);
    expect(store.meanLatency).toBeCloseTo(0.3);
  });

  it("notifies listeners on every mutation", () => {
    let calls = 0;
    store.onChange(() => calls++);
    store.optimistic("User", "hi", "n1");
    store.settle({ time: "09:00:01 AM", speaker: "User", text: "hi", nonce: "n1" });
    store.applyStep({ step_id: "1.1", step_note: "x", suggested_message: null, mistake: null });
    expect(calls).toBe(3);
  });

  it("counts pending entries", () => {
    store.optimistic("User", "hi", "n1");
    store.optimistic("User", "ho", "n2");
    store.settle({ time: "09:00:01 AM", speaker: "User", text: "hi", nonce: "n1" });
    expect(store.pendingCount).toBe(1);
  });
});

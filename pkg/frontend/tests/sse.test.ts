import { describe, expect, it } from "vitest";

import { SseParser } from "../src/sse.js";

describe("SseParser", () => {
  it("parses a complete frame", () => {
    const parser = new SseParser();
    const events = parser.push('event: dialogue\ndata: {"text":"hi"}\n\n');
    expect(events).toEqual([{ event: "dialogue", data: '{"text":"hi"}', id: null }]);
  });

  it("buffers frames split across chunks", () => {
    const parser = new SseParser();
    expect(parser.push("event: step\nda")).toEqual([]);
    expect(parser.push("ta: {}\n")).toEqual([]);
    const events = parser.push("\n");
    expect(events).toEqual([{ event: "step", data: "{}", id: null }]);
  });

  it("returns several frames from one chunk", () => {
    const parser = new SseParser();
    const events = parser.push("data: a\n\ndata: b\n\n");
    expect(events.map((e) => e.data)).toEqual(["a", "b"]);
  });

  it("defaults the event type to message", () => {
    const parser = new SseParser();
    expect(parser.push("data: x\n\n")[0]!.event).toBe("message");
  });

  it("captures the id field", () => {
    const parser = new SseParser();
    expect(parser.push("id: 7\nevent: dialogue\ndata: {}\n\n")[0]!.id).toBe("7");
  });

  it("joins multi-line data with newlines", () => {
    const parser = new SseParser();
    expect(parser.push("data: first\ndata: second\n\n")[0]!.data).toBe("first\nsecond");
  });

  it("ignores keep-alive comments", () => {
    const parser = new SseParser();
    expect(parser.push(": keep-alive\n\n")).toEqual([]);
    expect(parser.push(": ping\n\ndata: real\n\n").map((e) => e.data)).toEqual(["real"]);
  });

  it("tolerates CRLF line endings", () => {
    const parser = new SseParser();
    const events = parser.push("event: dialogue\r\ndata: x\r\n\n");
    expect(events).toEqual([{ event: "dialogue", data: "x", id: null }]);
  });

  it("preserves leading space handling per the SSE field rules", () => {
    const parser = new SseParser();
    // exactly one space after the colon is stripped; further spaces belong to the value
    expect(parser.push("data:  padded\n\n")[0]!.data).toBe(" padded");
    expect(parser.push("data:tight\n\n")[0]!.data).toBe("tight");
  });
});

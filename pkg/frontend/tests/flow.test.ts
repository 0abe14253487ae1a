import { describe, expect, it } from "vitest";

import { ExamFlow, infoText } from "../src/flow";
import { StubApi } from "./stub";

const PNG_B64 = "aW1hZ2U="; // payload content is irrelevant to the stub

async function flowThroughDetails(api: StubApi): Promise<ExamFlow> {
  const flow = new ExamFlow(api, { pollIntervalMs: 1 });
  await flow.connect();
  await flow.startExam("P001");
  await flow.saveDetails();
  await flow.saveCounts();
  return flow;
}

describe("connect gate", () => {
  it("advances to the patient screen when healthy and compatible", async () => {
    const flow = new ExamFlow(new StubApi());
    await flow.connect();
    expect(flow.getState().screen).toBe("patient");
    expect(flow.getState().serverVersion).toBe("1.0.0");
  });

  it("blocks on an incompatible client version", async () => {
    const api = new StubApi();
    api.compatible = false;
    const flow = new ExamFlow(api);
    await flow.connect();
    expect(flow.getState().screen).toBe("connect");
    expect(flow.getState().banner).toMatch(/too old/);
  });

  it("blocks on a degraded server", async () => {
    const api = new StubApi();
    api.healthy = false;
    const flow = new ExamFlow(api);
    await flow.connect();
    expect(flow.getState().screen).toBe("connect");
    expect(flow.getState().banner).toMatch(/degraded/);
  });

  it("shows a retry banner when the server is unreachable", async () => {
    const api = new StubApi();
    api.status = async () => {
      const { ConnectionError } = await import("../src/api");
      throw new ConnectionError("refused");
    };
    const flow = new ExamFlow(api);
    await flow.connect();
    expect(flow.getState().banner).toMatch(/Cannot reach the server/);
  });
});

describe("six screen flow", () => {
  it("walks patient -> details -> counts -> photo -> result -> confirm -> done", async () => {
    const api = new StubApi();
    const flow = new ExamFlow(api, { pollIntervalMs: 1 });
    const screens: string[] = [];
    flow.subscribe((state) => {
      if (screens[screens.length - 1] !== state.screen) {
        screens.push(state.screen);
      }
    });

    await flow.connect();
    await flow.startExam("P001");
    await flow.saveDetails();
    await flow.saveCounts();
    expect(flow.getState().screen).toBe("photo");
    expect(flow.getState().currentSide).toBe("left");

    await flow.uploadPhoto("left", PNG_B64, 100, 100);
    expect(flow.getState().feet.left.detections).toHaveLength(1);
    flow.toConfirmation();
    await flow.confirmResult("left", true);

    // wizard moves on to the right foot
    expect(flow.getState().screen).toBe("photo");
    expect(flow.getState().currentSide).toBe("right");
    await flow.uploadPhoto("right", PNG_B64, 100, 100);
    flow.toConfirmation();
    await flow.confirmResult("right", false);

    expect(flow.getState().screen).toBe("review");
    await flow.completeExam();
    expect(flow.getState().screen).toBe("done");
    expect(flow.getState().examCompleted).toBe(true);

    expect(screens).toEqual([
      "connect", "patient", "details", "counts", "photo", "result", "confirm",
      "photo", "result", "confirm", "review", "done",
    ]);
  });

  it("skipped feet bypass photo screens", async () => {
    const api = new StubApi();
    const flow = await flowThroughDetails(api);
    flow.skipPhoto("left");
    expect(flow.getState().currentSide).toBe("right");
    flow.skipPhoto("right");
    expect(flow.getState().screen).toBe("review");
    await flow.completeExam();
    expect(flow.getState().screen).toBe("done");
  });

  it("polls until the job completes", async () => {
    const api = new StubApi();
    api.jobPollsBeforeComplete = 3;
    const flow = await flowThroughDetails(api);
    await flow.uploadPhoto("left", PNG_B64, 100, 100);
    const polls = api.calls.filter((c) => c.startsWith("getJob")).length;
    expect(polls).toBeGreaterThanOrEqual(4);
    expect(flow.getState().feet.left.detections).toHaveLength(1);
  });
});

describe("server rejections", () => {
  it("maps error codes to human banners and re-syncs on 409", async () => {
    const api = new StubApi();
    const flow = await flowThroughDetails(api);
    await flow.uploadPhoto("left", PNG_B64, 100, 100);

    await flow.uploadPhoto("left", PNG_B64, 100, 100); // duplicate
    const state = flow.getState();
    expect(state.banner).toMatch(/cannot be retaken/);
    expect(api.calls.filter((c) => c === "getExam").length).toBeGreaterThan(0);
  });

  it("a tickbox flip racing another tab is rejected then re-synced", async () => {
    // two tabs on the same exam: tab B uploads the left photo while tab A
    // still believes the tickbox is editable
    const api = new StubApi();
    const tabA = await flowThroughDetails(api);
    const tabB = await flowThroughDetails(api);
    await tabB.uploadPhoto("left", PNG_B64, 100, 100);

    tabA.goTo("details");
    tabA.setChecked("left", false); // tab A has no photo locally: allowed
    await tabA.saveDetails();

    expect(tabA.getState().banner).toMatch(/locked/);
    // re-synced from the server: photo present, tickbox restored
    expect(tabA.getState().feet.left.photoId).not.toBeNull();
    expect(tabA.getState().feet.left.checked).toBe(true);
  });

  it("an exam completed elsewhere lands this tab on the terminal screen", async () => {
    const api = new StubApi();
    const tabA = await flowThroughDetails(api);
    const tabB = await flowThroughDetails(api);
    tabB.skipPhoto("left");
    tabB.skipPhoto("right");
    await tabB.completeExam();

    tabA.goTo("details");
    tabA.setChecked("right", false);
    await tabA.saveDetails(); // 409 ExamCompleted -> banner + resync

    expect(tabA.getState().banner).toMatch(/already complete/);
    expect(tabA.getState().screen).toBe("done");
    expect(tabA.getState().examCompleted).toBe(true);
  });
});

describe("request serialization", () => {
  it("drops a mutating request while another is in flight", async () => {
    const api = new StubApi();
    const resolvers: Array<() => void> = [];
    const original = api.putFootDetails.bind(api);
    api.putFootDetails = async (...args) => {
      await new Promise<void>((resolve) => resolvers.push(resolve));
      return original(...args);
    };
    const flow = new ExamFlow(api);
    await flow.connect();
    await flow.startExam("P001");

    let settled = false;
    const first = flow.saveDetails().then(() => (settled = true));
    const second = flow.saveDetails(); // must be a no-op while busy
    expect(flow.getState().busy).toBe(true);

    const deadline = Date.now() + 5000;
    while (!settled) {
      if (Date.now() > deadline) throw new Error("saveDetails never settled");
      resolvers.shift()?.();
      await new Promise((resolve) => setTimeout(resolve, 1));
    }
    await first;
    await second;
    const puts = api.calls.filter((c) => c.startsWith("putFootDetails"));
    expect(puts).toHaveLength(2); // one run saving two feet; no doubled calls
    expect(flow.getState().busy).toBe(false);
  });
});

describe("info bar", () => {
  it("always states the next required action", async () => {
    const api = new StubApi();
    const flow = new ExamFlow(api, { pollIntervalMs: 1 });
    expect(infoText(flow.getState())).toMatch(/Connect/);
    await flow.connect();
    expect(infoText(flow.getState())).toMatch(/QR/);
    await flow.startExam("P001");
    expect(infoText(flow.getState())).toMatch(/Tick each foot/);
    await flow.saveDetails();
    expect(infoText(flow.getState())).toMatch(/number of visible ulcers/);
    await flow.saveCounts();
    expect(infoText(flow.getState())).toMatch(/Photograph the left foot/);
  });
});

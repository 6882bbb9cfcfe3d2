// @vitest-environment jsdom
//
// End-to-end walk against the real service running on the fixture corpus:
// the DOM is driven the way a user would drive it (clicks and form
// submissions), and every dialogue decision comes back over HTTP.

import { spawn, ChildProcess } from "node:child_process";
import { existsSync } from "node:fs";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { WalkerApi } from "../src/api.ts";
import { WalkerController } from "../src/controller.ts";
import { render, Handlers } from "../src/ui.ts";

const FRONTEND_ROOT = resolve(dirname(fileURLToPath(import.meta.url)), "..");
const REPO_ROOT = resolve(FRONTEND_ROOT, "..");
const FIXTURES = join(REPO_ROOT, "tests", "fixtures");
const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/api/flowcharts`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("walker service did not come up");
}

beforeAll(async () => {
  const args = [
    "-m",
    "flowdial.cli",
    "serve",
    "--corpus-dir",
    FIXTURES,
    "--port",
    String(PORT),
  ];
  const dist = join(FRONTEND_ROOT, "dist");
  if (existsSync(join(dist, "index.html"))) {
    args.push("--static-dir", dist);
  }
  service = spawn(process.env.PYTHON ?? "python3", args, {
    cwd: REPO_ROOT,
    stdio: "ignore",
  });
  await waitForService();
}, 30_000);

afterAll(() => {
  service?.kill("SIGTERM");
});

interface Harness {
  controller: WalkerController;
  container: HTMLElement;
  click(selector: string, text?: string): void;
  type(text: string): void;
  waitIdle(): Promise<void>;
}

function makeHarness(): Harness {
  const container = document.createElement("div");
  document.body.append(container);
  const handlers: Handlers = {
    onOpenFlowchart: (id) => void controller.openSession(id),
    onSubmitInput: (text) => void controller.submitInput(text),
    onChooseOption: (guard) => void controller.chooseOption(guard),
    onReset: () => void controller.resetSession(),
    onRetry: () => void controller.loadFlowcharts(),
  };
  const controller = new WalkerController(new WalkerApi(BASE), (model) =>
    render(container, model, handlers),
  );
  let settle = 0;
  const harness: Harness = {
    controller,
    container,
    click(selector, text) {
      const nodes = [...container.querySelectorAll<HTMLElement>(selector)];
      const target = text
        ? nodes.find((n) => n.textContent?.includes(text))
        : nodes[0];
      if (!target) throw new Error(`no element ${selector} ${text ?? ""}`);
      target.click();
      settle++;
    },
    type(text) {
      const input = container.querySelector<HTMLInputElement>("input.user-input");
      const form = container.querySelector<HTMLFormElement>("form.input-form");
      if (!input || !form) throw new Error("input form not rendered");
      input.value = text;
      form.dispatchEvent(new window.Event("submit", { cancelable: true }));
      settle++;
    },
    async waitIdle() {
      for (let i = 0; i < 200; i++) {
        await new Promise((r) => setTimeout(r, 10));
        if (!controller.model.busy && settle >= 0) {
          // one extra tick so the final render lands
          await new Promise((r) => setTimeout(r, 10));
          if (!controller.model.busy) return;
        }
      }
      throw new Error("controller never settled");
    },
  };
  return harness;
}

function currentState(harness: Harness): string {
  return (
    harness.container.querySelector(".current-state")?.textContent ?? ""
  );
}

describe("walker end-to-end on the fixture corpus", () => {
  it("walks photo_shop down the quality-check no-branch to stop", async () => {
    const h = makeHarness();
    await h.controller.loadFlowcharts();
    await h.waitIdle();

    // Open photo_shop from the flow list.
    h.click("button.flowchart-item", "Customer arrives at photo shop");
    await h.waitIdle();
    expect(currentState(h)).toBe("Customer arrives at photo shop");
    expect(h.controller.model.selected?.id).toBe("photo_shop");

    // March the sequential prefix to the quality-check decision.
    const prefix = [
      "Submit photo files for printing",
      "Select print size and quantity",
      "Choose paper quality and surface effect",
      "Confirm print order and price",
      "Photo quality check passed?",
    ];
    for (const expected of prefix) {
      h.type("done, next please");
      await h.waitIdle();
      expect(currentState(h)).toBe(expected);
    }
    expect(h.controller.model.session?.kind).toBe("decision");

    // Take the "no" branch via its option button.
    h.click("button.option-button", "no");
    await h.waitIdle();
    expect(currentState(h)).toBe("Notify poor photo quality");

    // Complete the flow to stop.
    for (const expected of [
      "Reselect photos",
      "Reprint",
      "Complete transaction",
      "Customer leaves the photo shop",
    ]) {
      h.type(`${currentState(h)} has been completed.`);
      await h.waitIdle();
      expect(currentState(h)).toBe(expected);
    }
    h.type("Customer leaves the photo shop has been completed.");
    await h.waitIdle();
    expect(h.controller.model.session?.done).toBe(true);
    expect(h.container.querySelector(".current-state.done")).not.toBeNull();
    expect(h.container.textContent).toContain("walk complete");

    // Transition history shows the full walk, one entry per step.
    const entries = h.container.querySelectorAll(".history-entry");
    expect(entries).toHaveLength(11);
    expect(entries[5].textContent).toContain("Notify poor photo quality");
  });

  it("unmatched input shows the options without advancing history", async () => {
    const h = makeHarness();
    await h.controller.loadFlowcharts();
    await h.waitIdle();
    h.click("button.flowchart-item", "Customer arrives at photo shop");
    await h.waitIdle();

    for (let i = 0; i < 5; i++) {
      h.type("onwards");
      await h.waitIdle();
    }
    expect(currentState(h)).toBe("Photo quality check passed?");
    const historyBefore = h.controller.model.history.length;

    h.type("maybe");
    await h.waitIdle();

    const banner = h.container.querySelector(".error-banner");
    expect(banner).not.toBeNull();
    const optionTexts = [
      ...banner!.querySelectorAll("button.option-button"),
    ].map((b) => b.textContent);
    expect(optionTexts).toEqual(["yes", "no"]);
    expect(h.controller.model.history).toHaveLength(historyBefore);
    expect(currentState(h)).toBe("Photo quality check passed?");

    // Choosing one of the offered options recovers the walk.
    h.click(".error-banner button.option-button", "yes");
    await h.waitIdle();
    expect(currentState(h)).toBe("Pay fee");
    expect(h.controller.model.history).toHaveLength(historyBefore + 1);
  });

  it("backward steps are flagged in the timeline", async () => {
    const h = makeHarness();
    await h.controller.loadFlowcharts();
    await h.waitIdle();
    h.click("button.flowchart-item", "Communicate lighting design plan");
    await h.waitIdle();

    while (
      currentState(h) !== "Installation and debugging unsuccessful" &&
      !h.controller.model.session?.done
    ) {
      h.type("step finished");
      await h.waitIdle();
    }
    h.click("button.option-button", "yes"); // loop back
    await h.waitIdle();
    expect(currentState(h)).toBe(
      "Confirm fixture layout and installation position",
    );
    expect(
      h.container.querySelector(".history-entry.backward"),
    ).not.toBeNull();
  });

  it("serves the built bundle from --static-dir", async () => {
    const response = await fetch(`${BASE}/`);
    expect(response.status).toBe(200);
    const html = await response.text();
    expect(html).toContain("flowdial walker");
  });

  it("outline highlights the current state and collapses blocks", async () => {
    const h = makeHarness();
    await h.controller.loadFlowcharts();
    await h.waitIdle();
    h.click("button.flowchart-item", "Customer arrives at photo shop");
    await h.waitIdle();
    const highlighted = h.container.querySelector(".outline-line.current");
    expect(highlighted?.textContent).toContain("Customer arrives at photo shop");
    expect(h.container.querySelectorAll(".outline details").length).toBeGreaterThan(0);
  });
});

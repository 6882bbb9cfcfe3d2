// DOM rendering.  Components are plain functions from the view model to
// elements; render() rebuilds the app container from scratch on each
// model change.

import type { ViewModel } from "./state.ts";

export interface Handlers {
  onOpenFlowchart(id: string): void;
  onSubmitInput(text: string): void;
  onChooseOption(guard: string): void;
  onReset(): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function flowchartList(model: ViewModel, handlers: Handlers): HTMLElement {
  const panel = el("section", "flowchart-list");
  panel.append(el("h2", undefined, "Flows"));
  for (const flowchart of model.flowcharts) {
    const button = el("button", "flowchart-item", flowchart.title);
    button.dataset.id = flowchart.id;
    if (model.selected?.id === flowchart.id) button.classList.add("active");
    button.append(el("span", "node-count", ` ${flowchart.node_count} nodes`));
    button.addEventListener("click", () => handlers.onOpenFlowchart(flowchart.id));
    panel.append(button);
  }
  return panel;
}

interface OutlineLine {
  indent: number;
  text: string;
}

function outlineLines(plantuml: string): OutlineLine[] {
  return plantuml
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => ({
      indent: Math.floor((line.length - line.trimStart().length) / 2),
      text: line.trim(),
    }));
}

// Nested <details> blocks, one per indentation level, so deep flows can be
// collapsed while walking.
export function buildOutline(plantuml: string, currentState: string | null): HTMLElement {
  const root = el("div", "outline");
  const stack: HTMLElement[] = [root];
  for (const line of outlineLines(plantuml)) {
    while (stack.length - 1 > line.indent) stack.pop();
    const parent = stack[stack.length - 1];
    const opensBlock = /^(if |elseif |else |repeat$)/.test(line.text);
    const label = line.text.replace(/^:(.*);$/s, "$1");
    if (opensBlock) {
      const details = document.createElement("details");
      details.open = true;
      const summary = el("summary", "outline-line structural", line.text);
      details.append(summary);
      parent.append(details);
      stack.push(details);
    } else {
      const row = el("div", "outline-line", line.text);
      if (currentState !== null && label === currentState) {
        row.classList.add("current");
      }
      parent.append(row);
    }
  }
  return root;
}

function sessionPanel(model: ViewModel, handlers: Handlers): HTMLElement {
  const panel = el("section", "session-panel");
  const session = model.session;
  if (!session) {
    panel.append(el("p", "placeholder", "Open a flow to start walking it."));
    return panel;
  }
  const stateLine = el("h2", "current-state", session.state);
  if (session.done) stateLine.classList.add("done");
  panel.append(stateLine);
  panel.append(
    el("p", "state-kind", session.done ? "walk complete" : session.kind),
  );
  if (session.robotOutput) {
    panel.append(el("p", "robot-output", session.robotOutput));
  }

  if (model.error) {
    const banner = el("div", "error-banner");
    banner.append(el("p", undefined, model.error.message));
    if (model.error.code === "network") {
      const retry = el("button", "retry", "Retry");
      retry.addEventListener("click", handlers.onRetry);
      banner.append(retry);
    }
    for (const option of model.error.options) {
      const button = el("button", "option-button", option);
      button.addEventListener("click", () => handlers.onChooseOption(option));
      banner.append(button);
    }
    panel.append(banner);
  }

  if (!session.done) {
    if (session.kind === "decision") {
      const options = el("div", "options");
      for (const option of session.options) {
        const button = el("button", "option-button", option);
        button.addEventListener("click", () => handlers.onChooseOption(option));
        options.append(button);
      }
      panel.append(options);
    }
    const form = el("form", "input-form");
    const input = el("input", "user-input");
    input.placeholder =
      session.kind === "decision" ? "answer the question…" : "confirm the step…";
    input.disabled = model.busy;
    const send = el("button", "send", "Send");
    send.disabled = model.busy;
    form.append(input, send);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (input.value.trim()) handlers.onSubmitInput(input.value);
    });
    panel.append(form);
  }

  const reset = el("button", "reset", "Reset walk");
  reset.addEventListener("click", handlers.onReset);
  panel.append(reset);
  return panel;
}

function historyTimeline(model: ViewModel): HTMLElement {
  const panel = el("section", "history");
  panel.append(el("h2", undefined, "History"));
  const list = el("ol", "timeline");
  for (const entry of model.history) {
    const item = el("li", "history-entry");
    if (entry.backward) item.classList.add("backward");
    item.append(
      el("span", "h-state", entry.state),
      el("span", "h-input", ` “${entry.userInput}” → `),
      el("span", "h-next", entry.nextState),
    );
    if (entry.backward) item.append(el("span", "h-loop", " ⟲ backward"));
    list.append(item);
  }
  panel.append(list);
  return panel;
}

export function render(
  container: HTMLElement,
  model: ViewModel,
  handlers: Handlers,
): void {
  container.textContent = "";
  const layout = el("div", "layout");
  layout.append(flowchartList(model, handlers));
  const main = el("div", "main");
  main.append(sessionPanel(model, handlers), historyTimeline(model));
  layout.append(main);
  if (model.selected) {
    const outlinePanel = el("section", "outline-panel");
    outlinePanel.append(el("h2", undefined, model.selected.title));
    outlinePanel.append(
      buildOutline(model.selected.plantuml, model.session?.state ?? null),
    );
    layout.append(outlinePanel);
  }
  container.append(layout);
}

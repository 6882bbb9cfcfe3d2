import { WalkerApi } from "./api.ts";
import { WalkerController } from "./controller.ts";
import { render, Handlers } from "./ui.ts";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? "";
}

const container = document.getElementById("app");
if (!container) throw new Error("missing #app container");

const controller = new WalkerController(new WalkerApi(apiBase()), (model) =>
  render(container, model, handlers),
);

const handlers: Handlers = {
  onOpenFlowchart: (id) => void controller.openSession(id),
  onSubmitInput: (text) => void controller.submitInput(text),
  onChooseOption: (guard) => void controller.chooseOption(guard),
  onReset: () => void controller.resetSession(),
  onRetry: () => void controller.loadFlowcharts(),
};

void controller.loadFlowcharts();

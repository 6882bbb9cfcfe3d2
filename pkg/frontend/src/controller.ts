// Controller: calls the API, threads responses through the reducers, and
// notifies the renderer.  All dialogue decisions stay server-side.

import { ApiError, WalkerApi } from "./api.ts";
import {
  ViewModel,
  initialModel,
  withBusy,
  withFlowchartOpened,
  withFlowcharts,
  withSessionReset,
  withStepApplied,
  withStepRejected,
} from "./state.ts";

export class WalkerController {
  model: ViewModel = initialModel;

  constructor(
    readonly api: WalkerApi,
    readonly onChange: (model: ViewModel) => void = () => {},
  ) {}

  private set(model: ViewModel): void {
    this.model = model;
    this.onChange(model);
  }

  async loadFlowcharts(): Promise<void> {
    try {
      this.set(withFlowcharts(this.model, await this.api.listFlowcharts()));
    } catch (error) {
      this.set(withStepRejected(this.model, error as ApiError));
    }
  }

  async openSession(flowchartId: string): Promise<void> {
    this.set(withBusy(this.model, true));
    try {
      const detail = await this.api.getFlowchart(flowchartId);
      const session = await this.api.createSession(flowchartId);
      this.set(withBusy(withFlowchartOpened(this.model, detail, session), false));
    } catch (error) {
      this.set(withBusy(withStepRejected(this.model, error as ApiError), false));
    }
  }

  async submitInput(text: string): Promise<void> {
    const session = this.model.session;
    if (!session || this.model.busy) return;
    this.set(withBusy(this.model, true));
    try {
      const step = await this.api.step(session.sessionId, text);
      this.set(withBusy(withStepApplied(this.model, text, step), false));
    } catch (error) {
      this.set(withBusy(withStepRejected(this.model, error as ApiError), false));
    }
  }

  // Picking a branch submits its guard text as the user input.
  chooseOption(guard: string): Promise<void> {
    return this.submitInput(guard);
  }

  async resetSession(): Promise<void> {
    const session = this.model.session;
    if (!session) return;
    try {
      const view = await this.api.resetSession(session.sessionId);
      this.set(withSessionReset(this.model, view));
    } catch (error) {
      this.set(withStepRejected(this.model, error as ApiError));
    }
  }
}

// View-model reducers.  Every transition here is a pure function of the
// previous model and one API response, so the UI can never invent dialogue
// semantics of its own.

import type {
  ApiError,
  FlowchartDetail,
  FlowchartSummary,
  SessionView,
  StepResponse,
} from "./api.ts";

export interface HistoryEntry {
  state: string;
  userInput: string;
  nextState: string;
  backward: boolean;
}

export interface SessionModel {
  sessionId: string;
  state: string;
  kind: "sequential" | "decision";
  options: string[];
  done: boolean;
  robotOutput: string | null;
}

export interface ErrorBanner {
  code: string;
  message: string;
  options: string[];
}

export interface ViewModel {
  flowcharts: FlowchartSummary[];
  selected: FlowchartDetail | null;
  session: SessionModel | null;
  history: HistoryEntry[];
  error: ErrorBanner | null;
  busy: boolean;
}

export const initialModel: ViewModel = {
  flowcharts: [],
  selected: null,
  session: null,
  history: [],
  error: null,
  busy: false,
};

function sessionFromView(view: SessionView): SessionModel {
  return {
    sessionId: view.session_id,
    state: view.state,
    kind: view.kind,
    options: view.options,
    done: view.done,
    robotOutput: null,
  };
}

export function withFlowcharts(
  model: ViewModel,
  flowcharts: FlowchartSummary[],
): ViewModel {
  return { ...model, flowcharts, error: null };
}

export function withFlowchartOpened(
  model: ViewModel,
  detail: FlowchartDetail,
  session: SessionView,
): ViewModel {
  return {
    ...model,
    selected: detail,
    session: sessionFromView(session),
    history: [],
    error: null,
  };
}

export function withStepApplied(
  model: ViewModel,
  userInput: string,
  step: StepResponse,
): ViewModel {
  const previous = model.session;
  if (previous === null) return model;
  return {
    ...model,
    session: {
      ...previous,
      state: step.state,
      kind: step.state_kind,
      options: step.options,
      done: step.done,
      robotOutput: step.robot_output,
    },
    history: [
      ...model.history,
      {
        state: previous.state,
        userInput,
        nextState: step.next_state,
        backward: step.backward,
      },
    ],
    error: null,
  };
}

export function withStepRejected(model: ViewModel, error: ApiError): ViewModel {
  const message =
    error.code === "unmatched_guard"
      ? "That answer matches none of the branches. Pick an option:"
      : error.code === "session_done"
        ? "This walk already reached its end. Reset to start over."
        : error.code === "network"
          ? "The walker service is unreachable. Retry?"
          : `Request failed: ${error.code}`;
  return {
    ...model,
    error: { code: error.code, message, options: error.options },
  };
}

export function withSessionReset(model: ViewModel, session: SessionView): ViewModel {
  return {
    ...model,
    session: sessionFromView(session),
    history: [],
    error: null,
  };
}

export function withBusy(model: ViewModel, busy: boolean): ViewModel {
  return { ...model, busy };
}

export function clearError(model: ViewModel): ViewModel {
  return { ...model, error: null };
}

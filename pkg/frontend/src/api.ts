// Typed client for the walker service HTTP API.

export interface FlowchartSummary {
  id: string;
  title: string;
  node_count: number;
}

export interface GraphNode {
  id: number;
  kind: "start" | "stop" | "state" | "decision";
  label: string;
}

export interface GraphEdge {
  from: number;
  to: number;
  guard: string | null;
  backward: boolean;
}

export interface FlowchartDetail {
  id: string;
  title: string;
  plantuml: string;
  graph: { nodes: GraphNode[]; edges: GraphEdge[] };
}

export interface SessionView {
  session_id: string;
  flowchart_id: string;
  state: string;
  kind: "sequential" | "decision";
  options: string[];
  done: boolean;
  history: Array<{ state: string; user_input: string; next_state: string }>;
}

export interface StepResponse {
  next_state: string;
  robot_output: string;
  // Kind of the transition just taken; state_kind describes the node the
  // session now sits on (it decides whether options are offered).
  kind: "sequential" | "decision";
  backward: boolean;
  done: boolean;
  state: string;
  state_kind: "sequential" | "decision";
  options: string[];
  history_length: number;
}

export type ApiErrorCode =
  | "unknown_flowchart"
  | "unknown_session"
  | "unmatched_guard"
  | "session_done"
  | "network";

export class ApiError extends Error {
  constructor(
    readonly code: ApiErrorCode,
    readonly status: number,
    readonly options: string[] = [],
  ) {
    super(`${code} (HTTP ${status})`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
  } catch {
    throw new ApiError("network", 0);
  }
  if (!response.ok) {
    let code: ApiErrorCode = "network";
    let options: string[] = [];
    try {
      const body = await response.json();
      if (typeof body.error === "string") code = body.error as ApiErrorCode;
      if (Array.isArray(body.options)) options = body.options;
    } catch {
      // non-JSON error body; keep the network code
    }
    throw new ApiError(code, response.status, options);
  }
  return (await response.json()) as T;
}

export class WalkerApi {
  constructor(readonly base: string = "") {}

  listFlowcharts(): Promise<FlowchartSummary[]> {
    return request(this.base, "/api/flowcharts");
  }

  getFlowchart(id: string): Promise<FlowchartDetail> {
    return request(this.base, `/api/flowcharts/${encodeURIComponent(id)}`);
  }

  createSession(flowchartId: string): Promise<SessionView> {
    return request(this.base, "/api/sessions", {
      method: "POST",
      body: JSON.stringify({ flowchart_id: flowchartId }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return request(this.base, `/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  step(sessionId: string, input: string): Promise<StepResponse> {
    return request(this.base, `/api/sessions/${encodeURIComponent(sessionId)}/step`, {
      method: "POST",
      body: JSON.stringify({ input }),
    });
  }

  resetSession(sessionId: string): Promise<SessionView> {
    return request(this.base, `/api/sessions/${encodeURIComponent(sessionId)}/reset`, {
      method: "POST",
    });
  }

  deleteSession(sessionId: string): Promise<void> {
    return request(this.base, `/api/sessions/${encodeURIComponent(sessionId)}`, {
      method: "DELETE",
    });
  }
}

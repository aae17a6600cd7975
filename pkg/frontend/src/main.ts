// Bootstrap: wire the API client, the state container, and the renderer.
// The active session id lives in the URL hash so a refresh restores the view
// from GET /api/sessions/{id}.

import { ApiError, ConsultApi } from "./api.js";
import * as s from "./state.js";
import { render, Handlers } from "./ui.js";
import type { AnswerValue } from "./types.js";

const api = new ConsultApi();
const root = document.getElementById("app") as HTMLElement;
let state = s.initialState();

function update(next: s.UiState) {
  state = next;
  render(state, handlers, root);
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.status === 503) return "The server has no model loaded. Start it with a checkpoint and retry.";
    if (err.status === 409 || err.status === 410) return `This session is finished: ${err.message}`;
    return `${err.code}: ${err.message}`;
  }
  return String(err);
}

async function loadCatalog() {
  try {
    const catalog = await api.findings();
    update(s.catalogLoaded(state, catalog));
  } catch (err) {
    update(s.errorShown(state, describe(err)));
  }
}

async function restoreFromHash(): Promise<boolean> {
  const sessionId = window.location.hash.replace(/^#/, "");
  if (!sessionId) return false;
  try {
    const view = await api.getSession(sessionId);
    update(s.sessionRestored(state, view));
    return true;
  } catch {
    window.location.hash = "";
    return false;
  }
}

const handlers: Handlers = {
  onSearch(value) {
    update(s.setSearch(state, value));
  },
  onToggleFinding(id) {
    update(s.toggleFinding(state, id));
  },
  async onStart() {
    update(s.answerSubmitted(state));
    try {
      const step = await api.createSession([...state.selected].sort((a, b) => a - b));
      window.location.hash = step.session_id;
      update(s.sessionStarted(state, step));
    } catch (err) {
      update(s.errorShown(state, describe(err)));
    }
  },
  async onAnswer(answer: AnswerValue) {
    const asked = state.pendingInquiry;
    if (!asked || !state.sessionId || state.busy) return;
    update(s.answerSubmitted(state));
    try {
      const step = await api.submitAnswer(state.sessionId, answer);
      update(s.stepReceived(state, asked, answer, step));
    } catch (err) {
      update(s.errorShown(state, describe(err)));
    }
  },
  onToggleDistribution() {
    update(s.toggleFullDistribution(state));
  },
  async onRetry() {
    update(s.initialState());
    if (!(await restoreFromHash())) await loadCatalog();
  },
  async onNewSession() {
    window.location.hash = "";
    update(s.initialState());
    await loadCatalog();
  },
};

(async () => {
  render(state, handlers, root);
  if (!(await restoreFromHash())) await loadCatalog();
})();

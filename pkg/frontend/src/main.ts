/** Entry point: wires the backend URL setting, session start form, the
 * rating flow, and the results chart into the page shell. */

import { ApiError, RatingApi } from './api.js';
import { runSession } from './flow.js';
import { renderSample } from './rating-view.js';
import { renderResults } from './results-view.js';

const BACKEND_KEY = 'rating-ui:backend-url';

function query<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node;
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return `Server rejected the request: ${error.message}`;
  if (error instanceof Error) return `Request failed: ${error.message}`;
  return 'Request failed.';
}

function backendUrl(): string {
  return query<HTMLInputElement>('#backend-url').value.replace(/\/+$/, '');
}

async function startSession(stage: HTMLElement, status: HTMLElement): Promise<void> {
  const api = new RatingApi(backendUrl());
  localStorage.setItem(BACKEND_KEY, api.baseUrl);
  const rater = query<HTMLInputElement>('#rater-id').value.trim();
  const dataset = query<HTMLInputElement>('#dataset-dir').value.trim();
  const methods = query<HTMLInputElement>('#methods')
    .value.split(',')
    .map((m) => m.trim())
    .filter(Boolean);
  const nSamples = Number(query<HTMLInputElement>('#n-samples').value);
  const seed = Number(query<HTMLInputElement>('#seed').value || '0');

  status.textContent = 'Creating session...';
  try {
    const summary = await api.createSession({
      dataset,
      methods,
      n_samples: nSamples,
      rater_id: rater,
      seed,
    });
    status.textContent = `Session ${summary.session_id}`;
    await driveSession(api, summary.session_id, stage, status);
  } catch (error) {
    status.textContent = describeError(error);
  }
}

async function resumeSession(stage: HTMLElement, status: HTMLElement): Promise<void> {
  const api = new RatingApi(backendUrl());
  const sessionId = query<HTMLInputElement>('#resume-session-id').value.trim();
  if (!sessionId) {
    status.textContent = 'Enter a session id to resume.';
    return;
  }
  try {
    await driveSession(api, sessionId, stage, status);
  } catch (error) {
    status.textContent = describeError(error);
  }
}

async function driveSession(
  api: RatingApi,
  sessionId: string,
  stage: HTMLElement,
  status: HTMLElement,
): Promise<void> {
  await runSession(
    api,
    sessionId,
    (sample, prefill) =>
      renderSample(stage, sample, {
        imageUrl: (path) => api.imageUrl(path),
        prefill,
      }),
    {
      storage: localStorage,
      onProgress: (rated, total) => {
        status.textContent = `Session ${sessionId}: ${rated} of ${total} rated`;
      },
    },
  );
  stage.replaceChildren();
  const doneNote = document.createElement('p');
  doneNote.className = 'completion';
  doneNote.textContent = 'Session complete. Thank you!';
  stage.appendChild(doneNote);
}

async function showResults(stage: HTMLElement, status: HTMLElement): Promise<void> {
  const api = new RatingApi(backendUrl());
  const ids = query<HTMLInputElement>('#result-session-ids')
    .value.split(',')
    .map((s) => s.trim())
    .filter(Boolean);
  if (ids.length === 0) {
    renderResults(stage, null);
    return;
  }
  try {
    renderResults(stage, await api.results(ids));
  } catch (error) {
    status.textContent = describeError(error);
  }
}

function main(): void {
  const stage = query<HTMLElement>('#stage');
  const status = query<HTMLElement>('#status');
  const backend = query<HTMLInputElement>('#backend-url');
  backend.value = localStorage.getItem(BACKEND_KEY) ?? '';

  query<HTMLButtonElement>('#start-session').addEventListener('click', () => {
    void startSession(stage, status);
  });
  query<HTMLButtonElement>('#resume-session').addEventListener('click', () => {
    void resumeSession(stage, status);
  });
  query<HTMLButtonElement>('#show-results').addEventListener('click', () => {
    void showResults(stage, status);
  });
}

if (document.readyState === 'loading') {
  document.addEventListener('DOMContentLoaded', main);
} else {
  main();
}

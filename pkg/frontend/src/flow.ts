/** Session flow: loop next-sample -> collect ranking -> submit until done.
 *
 * Unsubmitted rankings are parked in storage before each submit attempt and
 * cleared on acknowledgement, so a network drop or refresh never loses the
 * rater's work: on resume the pending sample comes back (the server is
 * idempotent) and the parked ranking pre-fills the view.
 */

import { ApiError, PendingSample, RatingApi, RatingAck } from './api.js';

/** Narrow slice of the Storage interface so tests can pass a plain map. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

function pendingKey(sessionId: string, sampleId: string): string {
  return `pending-ranking:${sessionId}:${sampleId}`;
}

export function savePendingRanking(
  store: KeyValueStore,
  sessionId: string,
  sampleId: string,
  ranking: string[],
): void {
  store.setItem(pendingKey(sessionId, sampleId), JSON.stringify(ranking));
}

export function loadPendingRanking(
  store: KeyValueStore,
  sessionId: string,
  sampleId: string,
): string[] | null {
  const raw = store.getItem(pendingKey(sessionId, sampleId));
  if (raw === null) return null;
  try {
    const parsed = JSON.parse(raw) as unknown;
    if (Array.isArray(parsed) && parsed.every((x) => typeof x === 'string')) {
      return parsed;
    }
  } catch {
    // fall through: malformed entry is treated as absent
  }
  return null;
}

export function clearPendingRanking(
  store: KeyValueStore,
  sessionId: string,
  sampleId: string,
): void {
  store.removeItem(pendingKey(sessionId, sampleId));
}

export interface SubmitRetryOptions {
  retries?: number;
  delayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Submit with retries on network failure only; HTTP errors propagate. */
export async function submitWithRetry(
  api: RatingApi,
  sessionId: string,
  sampleId: string,
  ranking: string[],
  options: SubmitRetryOptions = {},
): Promise<RatingAck> {
  const retries = options.retries ?? 3;
  const delayMs = options.delayMs ?? 500;
  const sleep = options.sleep ?? defaultSleep;
  let lastError: unknown;
  for (let attempt = 0; attempt <= retries; attempt++) {
    try {
      return await api.submitRating(sessionId, sampleId, ranking);
    } catch (error) {
      if (error instanceof ApiError) throw error;
      lastError = error;
      if (attempt < retries) await sleep(delayMs);
    }
  }
  throw lastError;
}

/** Renders one pending sample and resolves with the rater's ranking. */
export type PresentSample = (
  sample: PendingSample,
  prefill: string[] | null,
) => Promise<string[]>;

export interface SessionFlowOptions {
  storage: KeyValueStore;
  onProgress?: (rated: number, total: number) => void;
  retry?: SubmitRetryOptions;
}

/**
 * Drive a session to completion. Returns the number of ratings submitted
 * by this run (resumed sessions submit fewer than `total`).
 */
export async function runSession(
  api: RatingApi,
  sessionId: string,
  present: PresentSample,
  options: SessionFlowOptions,
): Promise<number> {
  const { storage, onProgress, retry } = options;
  let submitted = 0;
  for (;;) {
    const sample = await api.nextSample(sessionId);
    onProgress?.(sample.rated, sample.total);
    if (sample.done) return submitted;

    const prefill = loadPendingRanking(storage, sessionId, sample.sample_id);
    const ranking = await present(sample, prefill);
    savePendingRanking(storage, sessionId, sample.sample_id, ranking);
    const ack = await submitWithRetry(api, sessionId, sample.sample_id, ranking, retry);
    clearPendingRanking(storage, sessionId, sample.sample_id);
    submitted += 1;
    onProgress?.(ack.rated, ack.total);
    if (ack.done) return submitted;
  }
}

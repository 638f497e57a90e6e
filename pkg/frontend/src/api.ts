/** Typed client for the rating service HTTP API. */

export const SCHEMA = 'rating/v1';

export interface SessionSummary {
  schema: string;
  session_id: string;
  rater_id: string;
  total: number;
  rated: number;
  created_at: string;
}

export interface CandidateView {
  candidate_id: string;
  image: string;
}

export interface PendingSample {
  schema: string;
  session_id: string;
  done: false;
  sample_id: string;
  index: number;
  rated: number;
  total: number;
  reference: { image: string };
  candidates: CandidateView[];
}

export interface DoneMarker {
  schema: string;
  session_id: string;
  done: true;
  rated: number;
  total: number;
}

export type NextSample = PendingSample | DoneMarker;

export interface RatingAck {
  schema: string;
  accepted: boolean;
  sample_id: string;
  rated: number;
  total: number;
  done: boolean;
}

export interface AggregateResults {
  schema: string;
  methods: string[];
  /** rater -> method -> count at each rank position (index 0 = first place) */
  rank_counts: Record<string, Record<string, number[]>>;
  first_place: Record<string, number>;
  completed: Record<string, number>;
}

export interface CreateSessionParams {
  dataset: string;
  methods: string[];
  n_samples: number;
  rater_id: string;
  seed?: number;
}

/** Server rejected the request; `status` carries the HTTP code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class RatingApi {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = '',
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  /** Absolute URL for a server-relative image path from a sample payload. */
  imageUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(params: CreateSessionParams): Promise<SessionSummary> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ schema: SCHEMA, seed: 0, ...params }),
    });
    return parseOrThrow<SessionSummary>(response);
  }

  async nextSample(sessionId: string): Promise<NextSample> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/next`,
    );
    return parseOrThrow<NextSample>(response);
  }

  async submitRating(
    sessionId: string,
    sampleId: string,
    ranking: string[],
  ): Promise<RatingAck> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/ratings`,
      {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify({ schema: SCHEMA, sample_id: sampleId, ranking }),
      },
    );
    return parseOrThrow<RatingAck>(response);
  }

  async results(sessionIds: string[]): Promise<AggregateResults> {
    const query = encodeURIComponent(sessionIds.join(','));
    const response = await this.fetchFn(`${this.baseUrl}/results?sessions=${query}`);
    return parseOrThrow<AggregateResults>(response);
  }
}

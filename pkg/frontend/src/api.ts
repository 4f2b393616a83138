/**
 * Typed client for the annotation service HTTP API.
 *
 * Task views arrive blinded: negation candidates are keyed by slot
 * letters and carry no hint of the method that produced them. Rating
 * payloads are flat JSON objects; `canonicalJson` renders one in the
 * contract form (sorted keys, two-space indent, trailing newline) that
 * the cross-language fixture tests compare byte for byte.
 */

export type Protocol = "quality" | "negation";
export type Entailment = 1 | 2 | 3 | "SKIP";

export interface QualityTaskPayload {
  claim: string;
  citance?: string;
  context?: string;
}

export interface BlindedNegation {
  slot: string;
  text: string;
}

export interface NegationTaskPayload {
  original_claim: string;
  negations: BlindedNegation[];
}

export interface QualityTask {
  task_id: string;
  protocol: "quality";
  payload: QualityTaskPayload;
}

export interface NegationTask {
  task_id: string;
  protocol: "negation";
  payload: NegationTaskPayload;
}

export type TaskView = QualityTask | NegationTask;

export interface RatingPayload {
  annotator: string;
  task_id: string;
  protocol: Protocol;
  revision: number;
  fluency?: number;
  decontextualized?: number;
  atomicity?: number;
  faithfulness?: number;
  slot?: string;
  entailment?: Entailment;
}

export interface ProtocolProgress {
  total: number;
  completed: number;
  remaining: number;
}

export interface ProgressView {
  annotator: string;
  protocols: Record<string, ProtocolProgress>;
}

/** Render a flat payload in the shared contract form. */
export function canonicalJson(payload: Record<string, unknown>): string {
  const sorted = Object.fromEntries(
    Object.entries(payload)
      .filter(([, value]) => value !== undefined)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
  );
  return JSON.stringify(sorted, null, 2) + "\n";
}

/** The server saw a newer revision; reload the task before retrying. */
export class RevisionConflict extends Error {}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationApi {
  private readonly fetchFn: FetchLike;

  constructor(private readonly base = "", fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    const body = await response.text();
    if (response.status === 409) {
      throw new RevisionConflict(body);
    }
    if (!response.ok) {
      throw new ApiError(response.status, body);
    }
    return body ? JSON.parse(body) : null;
  }

  async nextTask(annotator: string, protocol: Protocol): Promise<TaskView | null> {
    const query = new URLSearchParams({ annotator, protocol });
    const data = (await this.request(`/v1/tasks/next?${query}`)) as {
      done: boolean;
      task: TaskView | null;
    };
    return data.task;
  }

  /** Returns the revision the server stored. */
  async submitRating(payload: RatingPayload): Promise<number> {
    const data = (await this.request("/v1/ratings", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: canonicalJson(payload as unknown as Record<string, unknown>),
    })) as { stored_revision: number };
    return data.stored_revision;
  }

  async progress(annotator: string): Promise<ProgressView> {
    const query = new URLSearchParams({ annotator });
    return (await this.request(`/v1/progress?${query}`)) as ProgressView;
  }
}

/**
 * Client-side mirror of the server's rating gate.
 *
 * Criteria unlock strictly in order: fluency always; de-contextualized
 * once fluency > 1; atomicity and faithfulness once the claim is also
 * de-contextualized. Payload builders strip anything behind a closed
 * gate and refuse incomplete states, so no constructible payload can
 * violate the server's validation.
 */

import type { Entailment, RatingPayload } from "./api.js";

export type Fluency = 1 | 2 | 3;
export type Binary = 0 | 1;
export type Faithfulness = 1 | 2 | 3 | 4 | 5;

export interface QualityRatings {
  fluency?: Fluency;
  decontextualized?: Binary;
  atomicity?: Binary;
  faithfulness?: Faithfulness;
}

export type Criterion = keyof QualityRatings;

export const CRITERION_ORDER: readonly Criterion[] = [
  "fluency",
  "decontextualized",
  "atomicity",
  "faithfulness",
];

/** Criteria the current state exposes, in rating order. */
export function visibleCriteria(ratings: QualityRatings): Criterion[] {
  const visible: Criterion[] = ["fluency"];
  const legible = ratings.fluency !== undefined && ratings.fluency > 1;
  if (legible) {
    visible.push("decontextualized");
    if (ratings.decontextualized === 1) {
      visible.push("atomicity", "faithfulness");
    }
  }
  return visible;
}

/** True once every exposed criterion is rated. */
export function isComplete(ratings: QualityRatings): boolean {
  if (ratings.fluency === undefined) return false;
  if (ratings.fluency === 1) return true;
  if (ratings.decontextualized === undefined) return false;
  if (ratings.decontextualized === 0) return true;
  return ratings.atomicity !== undefined && ratings.faithfulness !== undefined;
}

/**
 * Drop values behind a closed gate. The UI keeps stale selections
 * around so reopening a gate restores them, but they must never leave
 * the client.
 */
export function gatedRatings(ratings: QualityRatings): QualityRatings {
  const kept: QualityRatings = {};
  if (ratings.fluency === undefined) return kept;
  kept.fluency = ratings.fluency;
  if (ratings.fluency === 1) return kept;
  if (ratings.decontextualized === undefined) return kept;
  kept.decontextualized = ratings.decontextualized;
  if (ratings.decontextualized === 0) return kept;
  if (ratings.atomicity !== undefined) kept.atomicity = ratings.atomicity;
  if (ratings.faithfulness !== undefined) kept.faithfulness = ratings.faithfulness;
  return kept;
}

export function buildQualityPayload(
  annotator: string,
  taskId: string,
  revision: number,
  ratings: QualityRatings
): RatingPayload {
  if (!isComplete(ratings)) {
    throw new Error("quality rating incomplete; submit blocked");
  }
  return {
    annotator,
    task_id: taskId,
    protocol: "quality",
    revision,
    ...gatedRatings(ratings),
  };
}

// --- negation protocol ---

/** Ratings keyed by the server-assigned slot letter. */
export type SlotRatings = Record<string, Entailment>;

export function negationComplete(
  slots: readonly string[],
  ratings: SlotRatings
): boolean {
  return slots.length > 0 && slots.every((slot) => ratings[slot] !== undefined);
}

export function buildNegationPayload(
  annotator: string,
  taskId: string,
  revision: number,
  slot: string,
  entailment: Entailment
): RatingPayload {
  if (!slot) {
    throw new Error("negation rating requires a slot");
  }
  return {
    annotator,
    task_id: taskId,
    protocol: "negation",
    revision,
    slot,
    entailment,
  };
}

/** One payload per slot, in the server-provided slot order. */
export function buildNegationPayloads(
  annotator: string,
  taskId: string,
  revision: number,
  slots: readonly string[],
  ratings: SlotRatings
): RatingPayload[] {
  if (!negationComplete(slots, ratings)) {
    throw new Error("every slot needs a rating; submit blocked");
  }
  return slots.map((slot) =>
    buildNegationPayload(annotator, taskId, revision, slot, ratings[slot] as Entailment)
  );
}

/**
 * Entailment-judgment form for blinded negation candidates.
 *
 * The original claim is shown as the premise; each candidate renders
 * in the exact order the server sent (no client-side reshuffle) under
 * its slot letter only. Submission stays blocked until every slot has
 * a judgment; rating everything SKIP is a valid submission. Keys 1-3
 * rate the first unrated slot, S skips it.
 */

import type { Entailment, NegationTask, RatingPayload } from "./api.js";
import { buildNegationPayloads, negationComplete, type SlotRatings } from "./gating.js";

export const ENTAILMENT_OPTIONS: [Entailment, string][] = [
  [3, "The hypothesis is DEFINITELY FALSE given the premise"],
  [2, "The hypothesis MIGHT BE TRUE given the premise"],
  [1, "The hypothesis is DEFINITELY TRUE given the premise"],
  ["SKIP", "The hypothesis contains a lot of grammatical errors and cannot be understood"],
];

export interface NegationFormOptions {
  annotator: string;
  revision: number;
  /** Receives one payload per slot, in server slot order. */
  onSubmit: (payloads: RatingPayload[]) => void;
}

export function renderNegationForm(
  root: HTMLElement,
  task: NegationTask,
  options: NegationFormOptions
): void {
  const slots = task.payload.negations.map((negation) => negation.slot);
  const ratings: SlotRatings = {};

  const finalize = () => {
    options.onSubmit(
      buildNegationPayloads(
        options.annotator,
        task.task_id,
        options.revision,
        slots,
        ratings
      )
    );
  };

  const select = (slot: string, value: Entailment) => {
    ratings[slot] = value;
    render();
  };

  const slotBlock = (slot: string, text: string) => {
    const fieldset = document.createElement("fieldset");
    fieldset.dataset.slot = slot;
    const legend = document.createElement("legend");
    legend.textContent = `Hypothesis ${slot}`;
    fieldset.appendChild(legend);
    const hypothesis = document.createElement("p");
    hypothesis.className = "hypothesis";
    hypothesis.textContent = text;
    fieldset.appendChild(hypothesis);
    for (const [value, label] of ENTAILMENT_OPTIONS) {
      const wrapper = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `${task.task_id}-${slot}`;
      input.value = String(value);
      input.checked = ratings[slot] === value;
      input.addEventListener("change", () => select(slot, value));
      wrapper.appendChild(input);
      wrapper.appendChild(document.createTextNode(` ${value} - ${label}`));
      fieldset.appendChild(wrapper);
    }
    return fieldset;
  };

  const render = () => {
    const premise = document.createElement("p");
    premise.className = "premise";
    premise.textContent = `Premise: ${task.payload.original_claim}`;

    const form = document.createElement("form");
    form.addEventListener("submit", (event) => event.preventDefault());
    for (const negation of task.payload.negations) {
      form.appendChild(slotBlock(negation.slot, negation.text));
    }

    const submit = document.createElement("button");
    submit.type = "button";
    submit.className = "submit";
    submit.textContent = "Submit judgments";
    submit.disabled = !negationComplete(slots, ratings);
    submit.addEventListener("click", finalize);
    form.appendChild(submit);

    root.replaceChildren(premise, form);
  };

  root.addEventListener("keydown", (event) => {
    const pending = slots.find((slot) => ratings[slot] === undefined);
    if (!pending) return;
    if (event.key === "s" || event.key === "S") {
      select(pending, "SKIP");
      return;
    }
    const digit = Number.parseInt(event.key, 10);
    if (digit === 1 || digit === 2 || digit === 3) {
      select(pending, digit as Entailment);
    }
  });

  render();
}

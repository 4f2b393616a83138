/**
 * Stepwise quality-rating form.
 *
 * Only criteria whose gate is open are rendered. Selecting fluency = 1
 * finalizes immediately (nothing else is ratable for an illegible
 * claim); otherwise the submit button stays disabled until every
 * exposed criterion has a value. Number keys rate the first unrated
 * criterion.
 */

import type { QualityTask, RatingPayload } from "./api.js";
import {
  buildQualityPayload,
  isComplete,
  visibleCriteria,
  type Criterion,
  type QualityRatings,
} from "./gating.js";

export const CRITERION_TITLES: Record<Criterion, string> = {
  fluency: "Fluency",
  decontextualized: "De-Contextualized",
  atomicity: "Atomicity",
  faithfulness: "Faithfulness",
};

export const CRITERION_LABELS: Record<Criterion, [number, string][]> = {
  fluency: [
    [3, "The claim contains no grammatical errors and its meaning can be understood"],
    [2, "The claim contains some grammatical errors but is still understandable"],
    [1, "The claim contains many grammatical errors and cannot be understood"],
  ],
  decontextualized: [
    [1, "The claim is interpretable on its own and requires no context; the addition of the original context does not alter the meaning of the claim"],
    [0, "The claim cannot be interpreted in a meaningful way without the original context"],
  ],
  atomicity: [
    [1, "The claim is about a single entity/process (atomic)"],
    [0, "The claim is non-atomic and can be broken down into multiple claims"],
  ],
  faithfulness: [
    [5, "The claim is correct and fully supported and complete with respect to the original sentence and context"],
    [4, "The claim is correct with respect to the original sentence and context but leaves out information from the original sentence and context"],
    [3, "The claim is related to the original sentence and does not contain incorrect information but is not explicitly stated in the original sentence"],
    [2, "The claim contains explicitly incorrect information relative to the original sentence and context"],
    [1, "The claim has nothing to do with the original sentence"],
  ],
};

export interface QualityFormOptions {
  annotator: string;
  revision: number;
  onSubmit: (payload: RatingPayload) => void;
}

export function renderQualityForm(
  root: HTMLElement,
  task: QualityTask,
  options: QualityFormOptions
): void {
  const ratings: QualityRatings = {};

  const finalize = () => {
    options.onSubmit(
      buildQualityPayload(options.annotator, task.task_id, options.revision, ratings)
    );
  };

  const select = (criterion: Criterion, value: number) => {
    // the cast is safe: values come from CRITERION_LABELS
    (ratings as Record<Criterion, number>)[criterion] = value;
    if (criterion === "fluency" && value === 1) {
      finalize(); // short path: nothing else is ratable
      return;
    }
    render();
  };

  const criterionBlock = (criterion: Criterion) => {
    const fieldset = document.createElement("fieldset");
    fieldset.dataset.criterion = criterion;
    const legend = document.createElement("legend");
    legend.textContent = CRITERION_TITLES[criterion];
    fieldset.appendChild(legend);
    for (const [value, text] of CRITERION_LABELS[criterion]) {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `${task.task_id}-${criterion}`;
      input.value = String(value);
      input.checked = ratings[criterion] === value;
      input.addEventListener("change", () => select(criterion, value));
      label.appendChild(input);
      label.appendChild(document.createTextNode(` ${value} - ${text}`));
      fieldset.appendChild(label);
    }
    return fieldset;
  };

  const render = () => {
    const header = document.createElement("div");
    header.className = "task-header";
    const claim = document.createElement("p");
    claim.className = "claim";
    claim.textContent = task.payload.claim;
    header.appendChild(claim);
    if (task.payload.citance) {
      const citance = document.createElement("p");
      citance.className = "citance";
      citance.textContent = task.payload.citance;
      header.appendChild(citance);
    }
    if (task.payload.context) {
      const context = document.createElement("p");
      context.className = "context";
      context.textContent = task.payload.context;
      header.appendChild(context);
    }

    const form = document.createElement("form");
    form.addEventListener("submit", (event) => event.preventDefault());
    for (const criterion of visibleCriteria(ratings)) {
      form.appendChild(criterionBlock(criterion));
    }

    const submit = document.createElement("button");
    submit.type = "button";
    submit.className = "submit";
    submit.textContent = "Submit rating";
    submit.disabled = !isComplete(ratings);
    submit.addEventListener("click", finalize);
    form.appendChild(submit);

    root.replaceChildren(header, form);
  };

  root.addEventListener("keydown", (event) => {
    const digit = Number.parseInt(event.key, 10);
    if (Number.isNaN(digit)) return;
    const pending = visibleCriteria(ratings).find((c) => ratings[c] === undefined);
    if (!pending) return;
    if (CRITERION_LABELS[pending].some(([value]) => value === digit)) {
      select(pending, digit);
    }
  });

  render();
}

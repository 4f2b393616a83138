/**
 * App shell: sign in, fetch the next task for the chosen protocol,
 * render the matching form, submit, repeat. A revision conflict means
 * another session rated the same task first; the shell reloads so the
 * annotator continues from the server's current state.
 */

import {
  AnnotationApi,
  RevisionConflict,
  type Protocol,
  type RatingPayload,
  type TaskView,
} from "./api.js";
import { renderNegationForm } from "./negation.js";
import { renderQualityForm } from "./quality.js";

const api = new AnnotationApi();

function statusLine(root: HTMLElement, text: string): void {
  const status = document.createElement("p");
  status.className = "status";
  status.textContent = text;
  root.prepend(status);
}

async function showProgress(root: HTMLElement, annotator: string): Promise<void> {
  try {
    const progress = await api.progress(annotator);
    const parts = Object.entries(progress.protocols).map(
      ([name, p]) => `${name}: ${p.completed}/${p.total}`
    );
    statusLine(root, `Progress — ${parts.join(", ")}`);
  } catch {
    // progress display is best-effort; the task flow works without it
  }
}

async function submitAll(
  root: HTMLElement,
  annotator: string,
  protocol: Protocol,
  payloads: RatingPayload[]
): Promise<void> {
  try {
    for (const payload of payloads) {
      await api.submitRating(payload);
    }
  } catch (err) {
    if (err instanceof RevisionConflict) {
      statusLine(root, "A newer rating exists for this task; reloading it.");
    } else {
      statusLine(root, `Submission failed, nothing lost: ${String(err)}. Retry below.`);
      return; // leave the form as-is so the annotator can retry
    }
  }
  await taskLoop(root, annotator, protocol);
}

async function taskLoop(
  root: HTMLElement,
  annotator: string,
  protocol: Protocol
): Promise<void> {
  let task: TaskView | null;
  try {
    task = await api.nextTask(annotator, protocol);
  } catch (err) {
    root.replaceChildren();
    statusLine(root, `Could not fetch a task: ${String(err)}`);
    return;
  }
  root.replaceChildren();
  if (task === null) {
    statusLine(root, "All tasks for this protocol are done. Thank you.");
    await showProgress(root, annotator);
    return;
  }
  if (task.protocol === "quality") {
    renderQualityForm(root, task, {
      annotator,
      revision: 1,
      onSubmit: (payload) => void submitAll(root, annotator, protocol, [payload]),
    });
  } else {
    renderNegationForm(root, task, {
      annotator,
      revision: 1,
      onSubmit: (payloads) => void submitAll(root, annotator, protocol, payloads),
    });
  }
  await showProgress(root, annotator);
}

export function boot(root: HTMLElement): void {
  const form = document.createElement("form");
  const name = document.createElement("input");
  name.placeholder = "annotator id";
  name.name = "annotator";
  const picker = document.createElement("select");
  for (const protocol of ["quality", "negation"]) {
    const option = document.createElement("option");
    option.value = protocol;
    option.textContent = protocol;
    picker.appendChild(option);
  }
  const start = document.createElement("button");
  start.type = "submit";
  start.textContent = "Start annotating";
  form.append(name, picker, start);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const annotator = name.value.trim();
    if (!annotator) return;
    void taskLoop(root, annotator, picker.value as Protocol);
  });
  root.replaceChildren(form);
}

const app = document.getElementById("app");
if (app) {
  boot(app);
}

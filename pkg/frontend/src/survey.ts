/** End-of-session perception survey: four 1-to-10 ratings. */

export interface SurveyQuestion {
  id: string;
  label: string;
}

export const QUESTIONS: SurveyQuestion[] = [
  { id: "safety", label: "Safety measures taken" },
  { id: "arm-effect", label: "Degree of exercise on the arm" },
  { id: "hand-effect", label: "Degree of exercise on the hand" },
  { id: "overall", label: "Overall rating of the training" },
];

export const RATING_MIN = 1;
export const RATING_MAX = 10;

/** Parse a rating; null when it is not an integer in [1, 10]. */
export function validateRating(raw: string): number | null {
  const trimmed = raw.trim();
  if (!/^-?\d+$/.test(trimmed)) return null;
  const value = Number(trimmed);
  if (value < RATING_MIN || value > RATING_MAX) return null;
  return value;
}

export type SurveySubmit = (questionId: string, value: number) => Promise<void>;

export class SurveyForm {
  private rows = new Map<string, { input: HTMLInputElement; status: HTMLElement; button: HTMLButtonElement }>();

  constructor(root: HTMLElement, submit: SurveySubmit) {
    root.textContent = "";
    const title = document.createElement("h3");
    title.textContent = "How was the training? (1 = worst, 10 = best)";
    root.append(title);

    for (const q of QUESTIONS) {
      const row = document.createElement("div");
      row.className = "survey-row";
      const label = document.createElement("label");
      label.textContent = q.label;
      const input = document.createElement("input");
      input.type = "number";
      input.min = String(RATING_MIN);
      input.max = String(RATING_MAX);
      input.step = "1";
      const button = document.createElement("button");
      button.textContent = "Submit";
      const status = document.createElement("span");
      status.className = "survey-status";

      button.addEventListener("click", () => {
        const value = validateRating(input.value);
        if (value === null) {
          // blocked client-side; the server enforces the same range
          status.textContent = `enter an integer between ${RATING_MIN} and ${RATING_MAX}`;
          status.className = "survey-status err";
          return;
        }
        button.disabled = true;
        status.textContent = "sending";
        status.className = "survey-status";
        submit(q.id, value)
          .then(() => {
            status.textContent = `recorded ${value}`;
            status.className = "survey-status ok";
          })
          .catch((err: unknown) => {
            status.textContent = err instanceof Error ? err.message : "failed";
            status.className = "survey-status err";
          })
          .finally(() => {
            button.disabled = false;
          });
      });

      row.append(label, input, button, status);
      root.append(row);
      this.rows.set(q.id, { input, status, button });
    }
  }

  /** Reflect answers already recorded (e.g. after a reload). */
  showRecorded(survey: Record<string, number>): void {
    for (const [id, row] of this.rows) {
      const value = survey[id];
      if (value !== undefined) {
        row.input.value = String(value);
        row.status.textContent = `recorded ${value}`;
        row.status.className = "survey-status ok";
      }
    }
  }
}

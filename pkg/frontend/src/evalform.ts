/**
 * 7-item Likert evaluation form. Submit stays disabled until every item has
 * a selection; a failed POST keeps the record in localStorage and offers a
 * retry, so no completed form is ever lost to a flaky service.
 */

import { ApiError, Client, EvalRecord } from "./api.js";

export const EVAL_ITEMS: readonly string[] = [
  "SkinGPT-4's diagnosis is correct or relevant.",
  "SkinGPT-4's description is informative.",
  "SkinGPT-4's suggestions are useful.",
  "SkinGPT-4 can help doctors with diagnosis.",
  "SkinGPT-4 can help patients to understand their disease better.",
  "If SkinGPT-4 can be deployed locally, it protects patients' privacy.",
  "Willingness to use SkinGPT-4.",
];

export const LIKERT_LEVELS: readonly string[] = [
  "strongly agree",
  "agree",
  "neutral",
  "disagree",
  "strongly disagree",
];

const PENDING_KEY = "dermvlm.pendingEvalRecords";

export function pendingRecords(storage: Storage = localStorage): EvalRecord[] {
  try {
    return JSON.parse(storage.getItem(PENDING_KEY) ?? "[]");
  } catch {
    return [];
  }
}

function setPending(records: EvalRecord[], storage: Storage): void {
  storage.setItem(PENDING_KEY, JSON.stringify(records));
}

export interface EvalFormElements {
  form: HTMLFormElement;
  caseId: HTMLInputElement;
  raterId: HTMLInputElement;
  items: HTMLElement;
  submit: HTMLButtonElement;
  status: HTMLElement;
  retry: HTMLButtonElement;
}

export class EvalFormController {
  transcriptRef: string | null = null;

  constructor(
    private readonly client: Client,
    private readonly el: EvalFormElements,
    private readonly storage: Storage = localStorage,
  ) {
    this.renderItems();
    el.form.addEventListener("change", () => this.updateSubmitState());
    el.form.addEventListener("input", () => this.updateSubmitState());
    el.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
    el.retry.addEventListener("click", () => void this.retryPending());
    this.updateSubmitState();
    this.updateRetryState();
  }

  renderItems(): void {
    this.el.items.textContent = "";
    EVAL_ITEMS.forEach((text, index) => {
      const item = index + 1;
      const fieldset = document.createElement("fieldset");
      fieldset.className = "eval-item";
      fieldset.dataset.item = String(item);
      const legend = document.createElement("legend");
      legend.textContent = `${item}. ${text}`;
      fieldset.append(legend);
      for (const level of LIKERT_LEVELS) {
        const label = document.createElement("label");
        const radio = document.createElement("input");
        radio.type = "radio";
        radio.name = `item_${item}`;
        radio.value = level;
        label.append(radio, document.createTextNode(` ${level}`));
        fieldset.append(label);
      }
      this.el.items.append(fieldset);
    });
  }

  selections(): Record<string, string> {
    const data = new FormData(this.el.form);
    const out: Record<string, string> = {};
    for (let item = 1; item <= EVAL_ITEMS.length; item++) {
      const value = data.get(`item_${item}`);
      if (typeof value === "string" && value) out[String(item)] = value;
    }
    return out;
  }

  complete(): boolean {
    return (
      Object.keys(this.selections()).length === EVAL_ITEMS.length &&
      this.el.caseId.value.trim().length > 0
    );
  }

  updateSubmitState(): void {
    this.el.submit.disabled = !this.complete();
  }

  updateRetryState(): void {
    const pending = pendingRecords(this.storage).length;
    this.el.retry.hidden = pending === 0;
    if (pending > 0) {
      this.el.retry.textContent = `Retry ${pending} unsent record${pending > 1 ? "s" : ""}`;
    }
  }

  buildRecord(): EvalRecord | null {
    if (!this.complete()) return null; // inline validation: no request is sent
    const record: EvalRecord = {
      case_id: this.el.caseId.value.trim(),
      rater_id: this.el.raterId.value.trim() || "anonymous",
      ratings: this.selections(),
    };
    if (this.transcriptRef) record.transcript_ref = this.transcriptRef;
    return record;
  }

  private async post(record: EvalRecord): Promise<boolean> {
    try {
      await this.client.postEvalRecord(record);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        this.el.status.textContent = err.message; // rejected, not retryable
        return true;
      }
      return false;
    }
  }

  async submit(): Promise<void> {
    const record = this.buildRecord();
    if (!record) {
      this.el.status.textContent = "Please rate all 7 items first.";
      return;
    }
    if (await this.post(record)) {
      this.el.status.textContent = `Recorded evaluation for case ${record.case_id}.`;
      this.el.form.reset();
      this.updateSubmitState();
    } else {
      setPending([...pendingRecords(this.storage), record], this.storage);
      this.el.status.textContent = "Service unreachable; record saved locally.";
    }
    this.updateRetryState();
  }

  async retryPending(): Promise<void> {
    const remaining: EvalRecord[] = [];
    let sent = 0;
    for (const record of pendingRecords(this.storage)) {
      if (await this.post(record)) sent += 1;
      else remaining.push(record);
    }
    setPending(remaining, this.storage);
    this.el.status.textContent = remaining.length
      ? `Sent ${sent}; ${remaining.length} still unsent.`
      : `Sent ${sent} stored record${sent === 1 ? "" : "s"}.`;
    this.updateRetryState();
  }
}

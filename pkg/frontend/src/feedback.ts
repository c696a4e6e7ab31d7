// Feedback form state: enumeration-constrained inputs, submit gating, and a
// lock after the first successful submission. The payload it produces always
// satisfies the gateway's FeedbackRecord schema.

import type { AdoptedComponent, AdoptionLevel, FeedbackRecord } from './types.js'
import { ADOPTED_COMPONENTS, ADOPTION_LEVELS } from './types.js'

export class FeedbackFormState {
  readerId = ''
  confidenceBefore: number | null = null
  confidenceAfter: number | null = null
  adoptionPercent: AdoptionLevel | null = null
  adoptedComponents: Set<AdoptedComponent> = new Set()
  freeText = ''
  submitted = false

  constructor(readonly caseId: string) {}

  setConfidenceBefore(value: number): boolean {
    if (!Number.isInteger(value) || value < 1 || value > 5) return false
    this.confidenceBefore = value
    return true
  }

  setConfidenceAfter(value: number): boolean {
    if (!Number.isInteger(value) || value < 1 || value > 5) return false
    this.confidenceAfter = value
    return true
  }

  /** Rejects anything outside {0, 25, 50, 75, 100} before it reaches the network. */
  setAdoption(value: number): boolean {
    if (!(ADOPTION_LEVELS as readonly number[]).includes(value)) return false
    this.adoptionPercent = value as AdoptionLevel
    return true
  }

  toggleComponent(component: string): boolean {
    if (!(ADOPTED_COMPONENTS as readonly string[]).includes(component)) return false
    const c = component as AdoptedComponent
    if (this.adoptedComponents.has(c)) this.adoptedComponents.delete(c)
    else this.adoptedComponents.add(c)
    return true
  }

  get canSubmit(): boolean {
    return (
      !this.submitted &&
      this.readerId.trim().length > 0 &&
      this.confidenceBefore !== null &&
      this.confidenceAfter !== null &&
      this.adoptionPercent !== null
    )
  }

  buildRecord(): FeedbackRecord {
    if (!this.canSubmit) throw new Error('feedback form is not ready to submit')
    const record: FeedbackRecord = {
      case_id: this.caseId,
      reader_id: this.readerId.trim(),
      confidence_before: this.confidenceBefore!,
      confidence_after: this.confidenceAfter!,
      adoption_percent: this.adoptionPercent!,
      adopted_components: [...this.adoptedComponents].sort(),
    }
    if (this.freeText.trim()) record.free_text = this.freeText.trim()
    return record
  }

  /** Marks the form locked; a second submit is blocked by canSubmit. */
  lock(): void {
    this.submitted = true
  }
}

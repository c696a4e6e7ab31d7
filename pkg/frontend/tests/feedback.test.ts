import { describe, expect, it } from 'vitest'

import { FeedbackFormState } from '../src/feedback.js'
import { ADOPTION_LEVELS } from '../src/types.js'

function readyForm(): FeedbackFormState {
  const form = new FeedbackFormState('case-1')
  form.readerId = 'reader-7'
  form.setConfidenceBefore(3)
  form.setConfidenceAfter(4)
  form.setAdoption(75)
  return form
}

describe('FeedbackFormState', () => {
  it('submit stays disabled until required fields are set', () => {
    const form = new FeedbackFormState('case-1')
    expect(form.canSubmit).toBe(false)
    form.readerId = 'reader-7'
    expect(form.canSubmit).toBe(false)
    form.setConfidenceBefore(3)
    form.setConfidenceAfter(4)
    expect(form.canSubmit).toBe(false)
    form.setAdoption(75)
    expect(form.canSubmit).toBe(true)
  })

  it('blocks adoption values outside the enumeration before any network call', () => {
    const form = new FeedbackFormState('case-1')
    expect(form.setAdoption(30)).toBe(false)
    expect(form.adoptionPercent).toBeNull()
    for (const value of ADOPTION_LEVELS) {
      expect(form.setAdoption(value)).toBe(true)
    }
  })

  it('constrains confidence to integers 1..5', () => {
    const form = new FeedbackFormState('case-1')
    expect(form.setConfidenceBefore(0)).toBe(false)
    expect(form.setConfidenceBefore(6)).toBe(false)
    expect(form.setConfidenceBefore(2.5)).toBe(false)
    expect(form.setConfidenceBefore(5)).toBe(true)
  })

  it('rejects unknown adopted components', () => {
    const form = readyForm()
    expect(form.toggleComponent('diagnosis')).toBe(true)
    expect(form.toggleComponent('telepathy')).toBe(false)
    expect([...form.adoptedComponents]).toEqual(['diagnosis'])
    expect(form.toggleComponent('diagnosis')).toBe(true) // toggles off
    expect(form.adoptedComponents.size).toBe(0)
  })

  it('builds a well-formed record and omits empty free text', () => {
    const form = readyForm()
    form.toggleComponent('diagnostic_evidence')
    const record = form.buildRecord()
    expect(record).toEqual({
      case_id: 'case-1',
      reader_id: 'reader-7',
      confidence_before: 3,
      confidence_after: 4,
      adoption_percent: 75,
      adopted_components: ['diagnostic_evidence'],
    })
  })

  it('locks after submission: the second submit is blocked', () => {
    const form = readyForm()
    expect(form.canSubmit).toBe(true)
    form.lock()
    expect(form.canSubmit).toBe(false)
    expect(() => form.buildRecord()).toThrow(/not ready/)
  })
})

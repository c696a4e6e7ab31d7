// Contract test: feedback payloads built by the form always satisfy the
// gateway's FeedbackRecord schema, checked against the server's recorded
// OpenAPI document (fixtures/gateway-openapi.json).

import { readFileSync } from 'fs'
import { join, dirname } from 'path'
import { fileURLToPath } from 'url'
import { describe, expect, it } from 'vitest'

import { FeedbackFormState } from '../src/feedback.js'

const here = dirname(fileURLToPath(import.meta.url))
const openapi = JSON.parse(
  readFileSync(join(here, '..', 'fixtures', 'gateway-openapi.json'), 'utf-8'),
)
const schema = openapi.components.schemas.FeedbackRecord

function violations(payload: Record<string, any>): string[] {
  const problems: string[] = []
  for (const name of schema.required ?? []) {
    if (!(name in payload)) problems.push(`missing required field ${name}`)
  }
  for (const [name, value] of Object.entries(payload)) {
    const property = schema.properties[name]
    if (!property) {
      problems.push(`unknown field ${name}`)
      continue
    }
    const spec = property.anyOf ? property.anyOf[0] : property
    if (spec.enum && !spec.enum.includes(value)) {
      problems.push(`${name}: ${value} not in ${JSON.stringify(spec.enum)}`)
    }
    if (spec.type === 'integer') {
      if (!Number.isInteger(value)) problems.push(`${name}: not an integer`)
      if (spec.minimum !== undefined && value < spec.minimum) problems.push(`${name}: below minimum`)
      if (spec.maximum !== undefined && value > spec.maximum) problems.push(`${name}: above maximum`)
    }
    if (spec.type === 'array' && spec.items?.enum) {
      for (const item of value as unknown[]) {
        if (!spec.items.enum.includes(item)) problems.push(`${name}: ${item} not allowed`)
      }
    }
  }
  return problems
}

describe('feedback payloads against the recorded server schema', () => {
  it('the recorded schema constrains adoption to the five levels', () => {
    const adoption = schema.properties.adoption_percent
    expect(adoption.enum ?? adoption.anyOf?.[0]?.enum).toEqual([0, 25, 50, 75, 100])
  })

  it('every form-built payload validates', () => {
    for (const adoption of [0, 25, 50, 75, 100]) {
      for (const confidence of [1, 3, 5]) {
        const form = new FeedbackFormState(`case-${adoption}`)
        form.readerId = 'reader-1'
        form.setConfidenceBefore(confidence)
        form.setConfidenceAfter(confidence)
        form.setAdoption(adoption)
        form.toggleComponent('management')
        form.freeText = adoption === 50 ? 'helpful evidence section' : ''
        expect(violations(form.buildRecord())).toEqual([])
      }
    }
  })

  it('the validator itself rejects what the server would reject', () => {
    expect(violations({ case_id: 'c', reader_id: 'r', confidence_before: 3,
                        confidence_after: 3, adoption_percent: 30,
                        adopted_components: [] })).not.toEqual([])
    expect(violations({ case_id: 'c', reader_id: 'r', confidence_before: 9,
                        confidence_after: 3, adoption_percent: 25,
                        adopted_components: [] })).not.toEqual([])
  })
})

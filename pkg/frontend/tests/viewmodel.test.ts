// View-model behavior against a trace recorded from the real gateway.

import { readFileSync } from 'fs'
import { join, dirname } from 'path'
import { fileURLToPath } from 'url'
import { describe, expect, it } from 'vitest'

import { renderConflicts, renderReport, renderStageGroups, countReportSections } from '../src/render.js'
import type { TraceEvent } from '../src/types.js'
import { STAGES } from '../src/types.js'
import { TraceViewModel } from '../src/viewmodel.js'

const here = dirname(fileURLToPath(import.meta.url))

function recordedTrace(): { header: any; events: TraceEvent[] } {
  const lines = readFileSync(join(here, '..', 'fixtures', 'crvo-trace.ndjson'), 'utf-8')
    .split('\n')
    .filter((l) => l.trim())
    .map((l) => JSON.parse(l))
  return { header: lines[0], events: lines.slice(1) as TraceEvent[] }
}

function loadedViewModel(): TraceViewModel {
  const { header, events } = recordedTrace()
  const vm = new TraceViewModel()
  vm.setHeader(header)
  for (const event of events) vm.ingest(event)
  return vm
}

describe('TraceViewModel on the recorded CRVO run', () => {
  it('groups events into the five stages in order', () => {
    const vm = loadedViewModel()
    expect(vm.stageNames()).toEqual(STAGES)
    expect(vm.coversAllStages()).toBe(true)
  })

  it('drops no event: rendered count equals received count', () => {
    const vm = loadedViewModel()
    expect(vm.renderedEventCount).toBe(vm.receivedEventCount)
    expect(vm.receivedEventCount).toBe(recordedTrace().events.length)
  })

  it('invocation cards surface the modality and laterality summaries', () => {
    const vm = loadedViewModel()
    const summaries = vm.groups.flatMap((g) => g.cards.map((c) => c.summary))
    expect(summaries.some((s) => s.includes('SLO 98.8%'))).toBe(true)
    expect(summaries.some((s) => s.includes('OS 87.1%'))).toBe(true)
  })

  it('terminal event installs the six-section report panel', () => {
    const vm = loadedViewModel()
    expect(vm.terminal).toBe(true)
    expect(vm.report).not.toBeNull()
    const html = renderReport(vm.report!)
    expect(countReportSections(html)).toBe(6)
    for (const section of ['modality', 'image_quality', 'laterality', 'diagnosis', 'evidence', 'recommendations']) {
      expect(html).toContain(`data-section="${section}"`)
    }
    expect(html).toContain('central retinal vein occlusion')
  })

  it('renders stage groups with the event counter', () => {
    const vm = loadedViewModel()
    const html = renderStageGroups(vm)
    expect(html).toContain('data-stage-count="5"')
    expect(html).toContain(`<span id="event-count">${vm.receivedEventCount}</span>`)
  })

  it('rejects out-of-order events', () => {
    const { events } = recordedTrace()
    const vm = new TraceViewModel()
    vm.ingest(events[0])
    vm.ingest(events[1])
    expect(() => vm.ingest(events[0])).toThrow(/out of order/)
  })
})

describe('conflict banners', () => {
  it('names both conflicting tools', () => {
    const vm = new TraceViewModel()
    vm.ingest({ seq: 0, ts: 0, kind: 'stage_enter', payload: { stage: 'execute' } })
    vm.ingest({
      seq: 1,
      ts: 1,
      kind: 'conflict_detected',
      payload: {
        topic: 'diagnosis',
        parties: [
          { tool_id: 'general_screener', label: 'central serous chorioretinopathy', probability: 0.45 },
          { tool_id: 'csc_classifier', label: 'normal', probability: 0.75 },
        ],
        resolution: 'specialist_overrides',
      },
    })
    expect(vm.conflicts).toHaveLength(1)
    expect(vm.conflicts[0].toolNames).toEqual(['general_screener', 'csc_classifier'])
    const html = renderConflicts(vm.conflicts)
    expect(html).toContain('general_screener')
    expect(html).toContain('csc_classifier')
    expect(html).toContain('role="alert"')
  })
})

describe('failure handling', () => {
  it('a failure event is terminal and keeps all counts', () => {
    const vm = new TraceViewModel()
    vm.ingest({ seq: 0, ts: 0, kind: 'stage_enter', payload: { stage: 'interpret' } })
    vm.ingest({ seq: 1, ts: 1, kind: 'failure', payload: { reason: 'backend exploded' } })
    expect(vm.terminal).toBe(true)
    expect(vm.failure).toBe('backend exploded')
    expect(vm.renderedEventCount).toBe(2)
  })
})

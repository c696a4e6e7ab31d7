// End-to-end against a real gateway process: submit the CRVO fixture, watch
// the live stream build five stage groups, read the six-section report, and
// file schema-valid feedback.

import { spawn, type ChildProcess } from 'child_process'
import { mkdtempSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { GatewayClient } from '../src/client.js'
import { FIXTURE_CASES } from '../src/cases.js'
import { FeedbackFormState } from '../src/feedback.js'
import { countReportSections, renderReport, renderStageGroups } from '../src/render.js'
import { STAGES } from '../src/types.js'
import { TraceViewModel } from '../src/viewmodel.js'

const PORT = 8937
const BASE = `http://127.0.0.1:${PORT}`

let server: ChildProcess

async function waitForHealthy(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  for (;;) {
    try {
      const response = await fetch(`${BASE}/healthz`)
      if (response.ok) return
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error('gateway did not become healthy')
    await new Promise((r) => setTimeout(r, 250))
  }
}

beforeAll(async () => {
  const db = join(mkdtempSync(join(tmpdir(), 'console-e2e-')), 'gateway.db')
  server = spawn('ocuflow', ['serve', '--port', String(PORT), '--db', db], {
    stdio: 'ignore',
  })
  await waitForHealthy()
}, 30000)

afterAll(() => {
  server?.kill()
})

describe('console end-to-end against a live gateway', () => {
  it('CRVO fixture: five stage groups, then a six-section report', async () => {
    const client = new GatewayClient(BASE)
    const caseId = await client.submitCase({ case: FIXTURE_CASES.crvo, tier: 5, seed: 7 })
    expect(caseId).toBeTruthy()

    const vm = new TraceViewModel()
    await client.streamTrace(caseId, {
      onHeader: (h) => vm.setHeader(h),
      onEvent: (e) => vm.ingest(e),
    })

    expect(vm.stageNames()).toEqual(STAGES)
    expect(vm.renderedEventCount).toBe(vm.receivedEventCount)
    const stagesHtml = renderStageGroups(vm)
    expect(stagesHtml).toContain('data-stage-count="5"')
    expect(stagesHtml).toContain('SLO 98.8%')
    expect(stagesHtml).toContain('OS 87.1%')

    expect(vm.report).not.toBeNull()
    const reportHtml = renderReport(vm.report!)
    expect(countReportSections(reportHtml)).toBe(6)

    const viaEndpoint = await client.getReport(caseId)
    expect(viaEndpoint).toEqual(vm.report)
  }, 30000)

  it('feedback: the form only permits the five adoption levels and the server stores the record', async () => {
    const client = new GatewayClient(BASE)
    const caseId = await client.submitCase({ case: FIXTURE_CASES.misleading, tier: 5, seed: 1 })
    const vm = new TraceViewModel()
    await client.streamTrace(caseId, { onEvent: (e) => vm.ingest(e) })

    const form = new FeedbackFormState(caseId)
    form.readerId = 'e2e-reader'
    form.setConfidenceBefore(3)
    form.setConfidenceAfter(4)
    expect(form.setAdoption(30)).toBe(false) // blocked before any network call
    expect(form.setAdoption(75)).toBe(true)
    form.toggleComponent('diagnostic_evidence')

    const result = await client.postFeedback(form.buildRecord())
    expect(result.status).toBe('stored')
    form.lock()
    expect(form.canSubmit).toBe(false)

    // the server itself rejects out-of-enum adoption, listing the levels
    const raw = await fetch(`${BASE}/v1/feedback`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        case_id: caseId, reader_id: 'e2e-reader', confidence_before: 3,
        confidence_after: 4, adoption_percent: 30, adopted_components: [],
      }),
    })
    expect(raw.status).toBe(422)
    const detail = JSON.stringify(await raw.json())
    for (const level of ['0', '25', '50', '75', '100']) expect(detail).toContain(level)
  }, 30000)

  it('unknown case id yields 404 without retries', async () => {
    const client = new GatewayClient(BASE)
    await expect(
      client.streamTrace('does-not-exist', { onEvent: () => undefined }),
    ).rejects.toMatchObject({ status: 404 })
  })

  it('conflict fixture raises a banner naming both tools', async () => {
    const client = new GatewayClient(BASE)
    // staged id from the bundled corpus: screening says CSC, specialist disputes
    const caseId = await client.submitCase({
      case: {
        case_id: 'conflict-oct-01',
        images: [{ image_id: 'conflict_oct_01', uri: 'fixture://conflict_oct_01', modality_hint: 'OCT', laterality_hint: 'OS' }],
        query: 'What is the diagnosis?',
      },
      tier: 5,
    })
    const vm = new TraceViewModel()
    await client.streamTrace(caseId, { onEvent: (e) => vm.ingest(e) })
    expect(vm.conflicts.length).toBeGreaterThan(0)
    expect(vm.conflicts[0].toolNames).toContain('general_screener')
    expect(vm.conflicts[0].toolNames).toContain('csc_classifier')
  }, 30000)
})

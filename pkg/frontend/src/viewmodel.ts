// Builds the view model for the trace screen: staged event groups, one card
// per invocation, conflict banners, the report panel. Events render strictly
// in seq order and none is dropped: renderedEventCount always equals the
// number of events received.

import type { Stage, StructuredReport, TraceEvent, TraceHeader } from './types.js'
import { STAGES } from './types.js'

export interface InvocationCard {
  stepId: string
  toolId: string
  status: string
  summary: string
  origin: string
}

export interface StageGroup {
  stage: Stage
  events: TraceEvent[]
  cards: InvocationCard[]
}

export interface ConflictBanner {
  topic: string
  toolNames: string[]
  resolution: string | null
  text: string
}

export class TraceViewModel {
  header: TraceHeader | null = null
  groups: StageGroup[] = []
  conflicts: ConflictBanner[] = []
  report: StructuredReport | null = null
  failure: string | null = null
  reportOnly = false
  private received = 0
  private lastSeq = -1

  get receivedEventCount(): number {
    return this.received
  }

  /** Every event lands in a stage group; the invariant is count-preserving. */
  get renderedEventCount(): number {
    return this.groups.reduce((n, g) => n + g.events.length, 0)
  }

  get terminal(): boolean {
    return this.report !== null || this.failure !== null
  }

  setHeader(header: TraceHeader): void {
    this.header = header
  }

  ingest(event: TraceEvent): void {
    if (event.seq <= this.lastSeq) {
      throw new Error(`event out of order: seq ${event.seq} after ${this.lastSeq}`)
    }
    this.lastSeq = event.seq
    this.received += 1

    if (event.kind === 'stage_enter') {
      this.groups.push({ stage: event.payload.stage as Stage, events: [event], cards: [] })
      return
    }
    if (this.groups.length === 0) {
      // defensive: a malformed stream without a leading stage event
      this.groups.push({ stage: 'interpret', events: [], cards: [] })
    }
    const group = this.groups[this.groups.length - 1]
    group.events.push(event)

    switch (event.kind) {
      case 'invocation':
        group.cards.push(cardFor(event))
        break
      case 'conflict_detected':
        this.conflicts.push(bannerFor(event))
        break
      case 'final_report':
        this.report = event.payload.report as StructuredReport
        break
      case 'failure':
        this.failure = String(event.payload.reason ?? 'orchestration failed')
        break
      default:
        break
    }
  }

  stageNames(): Stage[] {
    return this.groups.map((g) => g.stage)
  }

  coversAllStages(): boolean {
    const names = this.stageNames()
    return STAGES.every((stage, i) => names[i] === stage)
  }
}

export function formatPercent(p: number): string {
  return `${(p * 100).toFixed(1)}%`
}

function cardFor(event: TraceEvent): InvocationCard {
  const result = event.payload.result ?? {}
  const status = String(result.status ?? 'unknown')
  return {
    stepId: String(event.payload.step_id),
    toolId: String(event.payload.tool_id),
    status,
    origin: String(event.payload.origin ?? 'initial'),
    summary: status === 'ok' ? summarize(result.payload ?? {}) : `${status}: ${result.reason ?? ''}`,
  }
}

function summarize(payload: Record<string, any>): string {
  if (Array.isArray(payload.predictions)) {
    return payload.predictions
      .map((p: any) => `${p.label} ${formatPercent(p.probability)}`)
      .join(', ')
  }
  if (Array.isArray(payload.lesions)) {
    if (payload.lesions.length === 0) return 'no lesions found'
    return payload.lesions.map((l: any) => `${l.lesion_type} n=${l.count}`).join(', ')
  }
  if (payload.avr !== undefined) {
    return `AVR ${payload.avr}, CRAE ${payload.crae} px, CRVE ${payload.crve} px`
  }
  if (payload.quantity !== undefined) {
    const scale = payload.scale_max ? ` of ${payload.scale_max}` : ''
    return `${payload.quantity}: ${payload.value}${scale}`
  }
  if (Array.isArray(payload.detections)) {
    if (payload.detections.length === 0) return 'no detections'
    return payload.detections
      .map((d: any) => `${d.label} ${formatPercent(d.confidence)}`)
      .join(', ')
  }
  if (payload.artifact_ref) {
    return `${payload.artifact_kind}: ${payload.artifact_ref}`
  }
  if (Array.isArray(payload.hits)) {
    return payload.hits.map((h: any) => h.source_id).join(', ') || 'no passages'
  }
  return JSON.stringify(payload).slice(0, 120)
}

function bannerFor(event: TraceEvent): ConflictBanner {
  const parties: Array<{ tool_id: string; label: string }> = event.payload.parties ?? []
  const toolNames = parties.map((p) => p.tool_id)
  const described = parties.map((p) => `${p.tool_id} says ${p.label}`).join(' vs ')
  return {
    topic: String(event.payload.topic ?? 'diagnosis'),
    toolNames,
    resolution: event.payload.resolution ?? null,
    text: `Conflicting outputs on ${event.payload.topic}: ${described}`,
  }
}

// Thin HTTP client for the gateway /v1 API, with NDJSON streaming and
// reconnect-with-replay: the server always replays from seq 0, so on
// resubscribe we drop everything below the last seq we already delivered.

import type { CaseSubmission, FeedbackRecord, StructuredReport, TraceEvent, TraceHeader } from './types.js'

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail)
  }
}

export interface StreamCallbacks {
  onHeader?: (header: TraceHeader) => void
  onEvent: (event: TraceEvent) => void
  onReconnect?: (attempt: number) => void
}

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init)
    if (!response.ok) {
      let detail = `${response.status}`
      try {
        const body = await response.json()
        detail = JSON.stringify(body.detail ?? body)
      } catch {
        /* non-JSON error body */
      }
      throw new GatewayError(response.status, detail)
    }
    return response
  }

  async submitCase(submission: CaseSubmission): Promise<string> {
    const response = await this.request('/v1/cases', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(submission),
    })
    const body = await response.json()
    return body.case_id
  }

  async getReport(caseId: string): Promise<StructuredReport> {
    const response = await this.request(`/v1/cases/${caseId}/report`)
    return (await response.json()) as StructuredReport
  }

  async postFeedback(record: FeedbackRecord): Promise<{ status: string; feedback_id: number }> {
    const response = await this.request('/v1/feedback', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(record),
    })
    return await response.json()
  }

  async listTools(tier: number): Promise<{ tier: number; tools: Array<Record<string, unknown>> }> {
    const response = await this.request(`/v1/tools?tier=${tier}`)
    return await response.json()
  }

  /**
   * Stream a case's events until the terminal event. Returns once the stream
   * finishes; disconnects auto-resubscribe with replay, deduplicated by seq.
   */
  async streamTrace(caseId: string, callbacks: StreamCallbacks, maxReconnects = 5): Promise<void> {
    let nextSeq = 0
    let headerSeen = false
    for (let attempt = 0; ; attempt++) {
      if (attempt > 0) callbacks.onReconnect?.(attempt)
      let terminal = false
      try {
        const response = await this.request(`/v1/cases/${caseId}/events`)
        for await (const line of ndjsonLines(response)) {
          const doc = JSON.parse(line)
          if (!('kind' in doc)) {
            if (!headerSeen) {
              headerSeen = true
              callbacks.onHeader?.(doc as TraceHeader)
            }
            continue
          }
          const event = doc as TraceEvent
          if (event.seq < nextSeq) continue // replayed prefix after a reconnect
          nextSeq = event.seq + 1
          callbacks.onEvent(event)
          if (event.kind === 'final_report' || event.kind === 'failure') terminal = true
        }
      } catch (error) {
        if (error instanceof GatewayError) throw error // 404 etc: do not retry
        if (attempt >= maxReconnects) throw error
        continue
      }
      if (terminal) return
      if (attempt >= maxReconnects) throw new Error(`stream ended without a terminal event for ${caseId}`)
    }
  }
}

async function* ndjsonLines(response: Response): AsyncGenerator<string> {
  if (!response.body) {
    // some fetch implementations buffer the whole body
    const text = await response.text()
    for (const line of text.split('\n')) if (line.trim()) yield line
    return
  }
  const reader = response.body.getReader()
  const decoder = new TextDecoder()
  let buffer = ''
  for (;;) {
    const { done, value } = await reader.read()
    if (done) break
    buffer += decoder.decode(value, { stream: true })
    let index
    while ((index = buffer.indexOf('\n')) >= 0) {
      const line = buffer.slice(0, index).trim()
      buffer = buffer.slice(index + 1)
      if (line) yield line
    }
  }
  const tail = buffer.trim()
  if (tail) yield tail
}

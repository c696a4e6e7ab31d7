// Streaming client behavior with an injected fetch: chunked NDJSON parsing,
// reconnect-with-replay deduplication, and 404 handling without retries.

import { describe, expect, it } from 'vitest'

import { GatewayClient, GatewayError } from '../src/client.js'
import type { TraceEvent } from '../src/types.js'

const header = { case_id: 'c1', seed: 7, catalog_hash: 'abc', tier: 5 }

function eventLine(seq: number, kind = 'stage_enter', payload: Record<string, unknown> = { stage: 'interpret' }) {
  return JSON.stringify({ seq, ts: seq, kind, payload })
}

function streamResponse(lines: string[], chunkSize = 7): Response {
  const text = lines.join('\n') + '\n'
  const encoder = new TextEncoder()
  let offset = 0
  const body = new ReadableStream<Uint8Array>({
    pull(controller) {
      if (offset >= text.length) {
        controller.close()
        return
      }
      controller.enqueue(encoder.encode(text.slice(offset, offset + chunkSize)))
      offset += chunkSize
    },
  })
  return new Response(body, { status: 200 })
}

describe('GatewayClient.streamTrace', () => {
  it('parses chunked NDJSON and stops at the terminal event', async () => {
    const lines = [
      JSON.stringify(header),
      eventLine(0),
      eventLine(1, 'invocation', { step_id: 's1', tool_id: 't', result: { status: 'ok', payload: {} } }),
      eventLine(2, 'final_report', { report: {}, findings: {} }),
    ]
    const client = new GatewayClient('http://fake', async () => streamResponse(lines))
    const seen: TraceEvent[] = []
    let sawHeader: unknown = null
    await client.streamTrace('c1', {
      onHeader: (h) => (sawHeader = h),
      onEvent: (e) => seen.push(e),
    })
    expect(sawHeader).toEqual(header)
    expect(seen.map((e) => e.seq)).toEqual([0, 1, 2])
  })

  it('resubscribes after a dropped stream and deduplicates the replay', async () => {
    let call = 0
    const first = [JSON.stringify(header), eventLine(0), eventLine(1)]
    const full = [
      JSON.stringify(header),
      eventLine(0),
      eventLine(1),
      eventLine(2),
      eventLine(3, 'final_report', { report: {} }),
    ]
    const client = new GatewayClient('http://fake', async () => {
      call += 1
      return streamResponse(call === 1 ? first : full)
    })
    const seen: number[] = []
    const reconnects: number[] = []
    await client.streamTrace('c1', {
      onEvent: (e) => seen.push(e.seq),
      onReconnect: (attempt) => reconnects.push(attempt),
    })
    expect(call).toBe(2)
    expect(reconnects).toEqual([1])
    expect(seen).toEqual([0, 1, 2, 3]) // no duplicates from the replayed prefix
  })

  it('does not retry a 404', async () => {
    let calls = 0
    const client = new GatewayClient('http://fake', async () => {
      calls += 1
      return new Response(JSON.stringify({ detail: 'unknown case id' }), { status: 404 })
    })
    await expect(
      client.streamTrace('missing', { onEvent: () => undefined }),
    ).rejects.toThrowError(GatewayError)
    expect(calls).toBe(1)
  })

  it('surfaces 4xx detail on submission', async () => {
    const client = new GatewayClient('http://fake', async () =>
      new Response(JSON.stringify({ detail: 'invalid case document: case_id' }), { status: 422 }))
    await expect(
      client.submitCase({ case: { case_id: '', images: [], query: 'x' } }),
    ).rejects.toThrow(/case_id/)
  })
})

// Browser entry: wires the submit form, the live trace view, the report
// panel, and the feedback form to the gateway client.

import { FIXTURE_CASES } from './cases.js'
import { GatewayClient, GatewayError } from './client.js'
import { FeedbackFormState } from './feedback.js'
import { renderConflicts, renderReport, renderStageGroups } from './render.js'
import { ADOPTED_COMPONENTS, ADOPTION_LEVELS } from './types.js'
import { TraceViewModel } from './viewmodel.js'

const client = new GatewayClient(window.location.origin.replace(/\/$/, ''))

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function setBanner(text: string, kind: 'error' | 'info' | '' = ''): void {
  const banner = el<HTMLDivElement>('banner')
  banner.textContent = text
  banner.className = kind ? `banner banner-${kind}` : 'banner hidden'
}

function refreshSubmitGate(): void {
  const query = el<HTMLTextAreaElement>('query').value.trim()
  const fixture = el<HTMLSelectElement>('fixture-case').value
  el<HTMLButtonElement>('submit-case').disabled = !(query || fixture)
}

function populateForm(): void {
  const select = el<HTMLSelectElement>('fixture-case')
  select.innerHTML =
    '<option value="">(no staged fixture)</option>' +
    Object.keys(FIXTURE_CASES)
      .map((key) => `<option value="${key}">${key} - ${FIXTURE_CASES[key].case_id}</option>`)
      .join('')
  select.addEventListener('change', () => {
    const key = select.value
    if (key) el<HTMLTextAreaElement>('query').value = FIXTURE_CASES[key].query
    refreshSubmitGate()
  })
  el<HTMLTextAreaElement>('query').addEventListener('input', refreshSubmitGate)
  refreshSubmitGate()

  const adoption = el<HTMLSelectElement>('adoption')
  adoption.innerHTML =
    '<option value="">choose</option>' +
    ADOPTION_LEVELS.map((v) => `<option value="${v}">${v}%</option>`).join('')
  const components = el<HTMLDivElement>('components')
  components.innerHTML = ADOPTED_COMPONENTS.map(
    (c) => `<label><input type="checkbox" data-component="${c}"> ${c.replace('_', ' ')}</label>`,
  ).join('')
}

let feedback: FeedbackFormState | null = null

function refreshFeedbackGate(): void {
  if (!feedback) return
  el<HTMLButtonElement>('submit-feedback').disabled = !feedback.canSubmit
}

function bindFeedback(caseId: string): void {
  feedback = new FeedbackFormState(caseId)
  const form = el<HTMLFieldSetElement>('feedback-fields')
  form.disabled = false
  el<HTMLInputElement>('reader-id').addEventListener('input', (event) => {
    feedback!.readerId = (event.target as HTMLInputElement).value
    refreshFeedbackGate()
  })
  el<HTMLInputElement>('confidence-before').addEventListener('input', (event) => {
    feedback!.setConfidenceBefore(Number((event.target as HTMLInputElement).value))
    refreshFeedbackGate()
  })
  el<HTMLInputElement>('confidence-after').addEventListener('input', (event) => {
    feedback!.setConfidenceAfter(Number((event.target as HTMLInputElement).value))
    refreshFeedbackGate()
  })
  el<HTMLSelectElement>('adoption').addEventListener('change', (event) => {
    const raw = (event.target as HTMLSelectElement).value
    if (raw !== '') feedback!.setAdoption(Number(raw))
    refreshFeedbackGate()
  })
  el<HTMLDivElement>('components').addEventListener('change', (event) => {
    const box = event.target as HTMLInputElement
    if (box.dataset.component) feedback!.toggleComponent(box.dataset.component)
  })
  el<HTMLTextAreaElement>('free-text').addEventListener('input', (event) => {
    feedback!.freeText = (event.target as HTMLTextAreaElement).value
  })
  el<HTMLButtonElement>('submit-feedback').addEventListener('click', async () => {
    if (!feedback?.canSubmit) return
    try {
      await client.postFeedback(feedback.buildRecord())
      feedback.lock()
      el<HTMLFieldSetElement>('feedback-fields').disabled = true
      setBanner('feedback stored - thank you', 'info')
    } catch (error) {
      setBanner(`feedback rejected: ${error}`, 'error')
    }
    refreshFeedbackGate()
  })
  refreshFeedbackGate()
}

function repaint(vm: TraceViewModel): void {
  el<HTMLDivElement>('conflicts').innerHTML = renderConflicts(vm.conflicts)
  el<HTMLDivElement>('trace').innerHTML = vm.reportOnly ? '' : renderStageGroups(vm)
  if (vm.report) el<HTMLDivElement>('report').innerHTML = renderReport(vm.report)
  if (vm.failure) setBanner(`case failed: ${vm.failure}`, 'error')
}

async function watchCase(caseId: string): Promise<void> {
  el<HTMLSpanElement>('case-id').textContent = caseId
  const vm = new TraceViewModel()
  el<HTMLInputElement>('report-only').addEventListener('change', (event) => {
    vm.reportOnly = (event.target as HTMLInputElement).checked
    repaint(vm)
  })
  bindFeedback(caseId)
  try {
    await client.streamTrace(caseId, {
      onHeader: (header) => {
        el<HTMLSpanElement>('case-meta').textContent = `tier ${header.tier}, seed ${header.seed}`
      },
      onEvent: (event) => {
        vm.ingest(event)
        repaint(vm)
      },
      onReconnect: (attempt) => setBanner(`stream dropped - resubscribing (#${attempt})`, 'info'),
    })
    setBanner('', '')
  } catch (error) {
    if (error instanceof GatewayError && error.status === 404) {
      el<HTMLDivElement>('trace').innerHTML =
        '<p class="not-found">404 - unknown case id</p>'
    } else {
      setBanner(`stream failed: ${error} - retry from the submit form`, 'error')
    }
  }
}

async function submit(): Promise<void> {
  const key = el<HTMLSelectElement>('fixture-case').value
  const query = el<HTMLTextAreaElement>('query').value.trim()
  const base = key ? FIXTURE_CASES[key] : { case_id: `console-${Date.now()}`, images: [], query: '' }
  const submission = { case: { ...base, query: query || base.query } }
  try {
    const caseId = await client.submitCase(submission)
    setBanner('', '')
    await watchCase(caseId)
  } catch (error) {
    if (error instanceof GatewayError) {
      setBanner(`submission rejected (${error.status}): ${error.message}`, 'error')
    } else {
      setBanner(`server unreachable - check the gateway and retry`, 'error')
    }
  }
}

export function boot(): void {
  populateForm()
  el<HTMLButtonElement>('submit-case').addEventListener('click', () => void submit())
}

if (typeof document !== 'undefined' && document.getElementById('submit-case')) {
  boot()
}

// Wire types mirroring the gateway's /v1 API. The console never computes
// clinical content; it is a pure view/controller over these documents.

export interface TraceHeader {
  case_id: string
  seed: number
  catalog_hash: string
  tier: number
}

export type EventKind =
  | 'stage_enter'
  | 'invocation'
  | 'validation_failure'
  | 'conflict_detected'
  | 'revision'
  | 'citation'
  | 'warning'
  | 'final_report'
  | 'failure'

export interface TraceEvent {
  seq: number
  ts: number
  kind: EventKind
  payload: Record<string, any>
}

export type Stage = 'interpret' | 'plan' | 'execute' | 'integrate' | 'respond'

export const STAGES: Stage[] = ['interpret', 'plan', 'execute', 'integrate', 'respond']

export interface EvidenceItem {
  text: string
  step_id: string
  citation?: { source_id: string; passage_id: string }
}

export interface StructuredReport {
  modality: string
  image_quality: string
  laterality: string
  diagnosis: string
  evidence: EvidenceItem[]
  recommendations: string
}

export const REPORT_SECTIONS = [
  'modality',
  'image_quality',
  'laterality',
  'diagnosis',
  'evidence',
  'recommendations',
] as const

export const ADOPTION_LEVELS = [0, 25, 50, 75, 100] as const
export type AdoptionLevel = (typeof ADOPTION_LEVELS)[number]

export const ADOPTED_COMPONENTS = [
  'image_details',
  'diagnosis',
  'diagnostic_evidence',
  'management',
] as const
export type AdoptedComponent = (typeof ADOPTED_COMPONENTS)[number]

export interface FeedbackRecord {
  case_id: string
  reader_id: string
  confidence_before: number
  confidence_after: number
  adoption_percent: AdoptionLevel
  adopted_components: AdoptedComponent[]
  free_text?: string
}

export interface CaseDocument {
  case_id: string
  images: Array<{
    image_id: string
    uri: string
    modality_hint?: string
    laterality_hint?: string
  }>
  query: string
  ground_truth?: Record<string, unknown>
}

export interface CaseSubmission {
  case: CaseDocument
  tier?: number
  seed?: number
}

// Pure HTML-string renderers; app.ts swaps them into the page. Keeping these
// string-valued makes the whole screen testable without a DOM.

import type { ConflictBanner, StageGroup, TraceViewModel } from './viewmodel.js'
import type { StructuredReport } from './types.js'
import { REPORT_SECTIONS } from './types.js'

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}

export function renderStageGroups(vm: TraceViewModel): string {
  const groups = vm.groups.map(renderGroup).join('\n')
  const counter = `<p class="event-counter">events: <span id="event-count">${vm.renderedEventCount}</span> of ${vm.receivedEventCount} received</p>`
  return `<section class="stages" data-stage-count="${vm.groups.length}">${groups}</section>${counter}`
}

function renderGroup(group: StageGroup): string {
  const cards = group.cards.map(renderCard).join('')
  const plain = group.events
    .filter((e) => !['invocation', 'stage_enter'].includes(e.kind))
    .map((e) => `<li class="event event-${e.kind}">${escapeHtml(e.kind)} #${e.seq}</li>`)
    .join('')
  return [
    `<article class="stage-group" data-stage="${group.stage}">`,
    `<h3>${group.stage}</h3>`,
    cards ? `<div class="cards">${cards}</div>` : '',
    plain ? `<ul class="other-events">${plain}</ul>` : '',
    `</article>`,
  ].join('')
}

function renderCard(card: { toolId: string; status: string; summary: string; stepId: string }): string {
  return [
    `<div class="card card-${card.status}" data-step="${escapeHtml(card.stepId)}">`,
    `<strong>${escapeHtml(card.toolId)}</strong>`,
    `<span class="status">${escapeHtml(card.status)}</span>`,
    `<span class="summary">${escapeHtml(card.summary)}</span>`,
    `</div>`,
  ].join('')
}

export function renderConflicts(banners: ConflictBanner[]): string {
  if (!banners.length) return ''
  return banners
    .map(
      (b) =>
        `<div class="conflict-banner" role="alert">${escapeHtml(b.text)}` +
        (b.resolution ? ` <em>(${escapeHtml(b.resolution)})</em>` : '') +
        `</div>`,
    )
    .join('')
}

export function renderReport(report: StructuredReport): string {
  const sections = REPORT_SECTIONS.map((name) => {
    if (name === 'evidence') {
      const items = report.evidence
        .map((e) => {
          const cite = e.citation
            ? ` <cite>[${escapeHtml(e.citation.source_id)}]</cite>`
            : ''
          return `<li data-step="${escapeHtml(e.step_id)}">${escapeHtml(e.text)}${cite}</li>`
        })
        .join('')
      return `<section class="report-section" data-section="evidence"><h4>evidence</h4><ul>${items}</ul></section>`
    }
    const value = report[name] as string
    return `<section class="report-section" data-section="${name}"><h4>${name.replace('_', ' ')}</h4><p>${escapeHtml(value)}</p></section>`
  })
  return `<section class="report-panel">${sections.join('')}</section>`
}

export function countReportSections(html: string): number {
  return (html.match(/class="report-section"/g) ?? []).length
}

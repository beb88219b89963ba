/**
 * Dictionary enrichment: list validated concept candidates and approve them
 * into the live fingerprint index.
 */
import type { Api } from '../api.js'
import { ApiError } from '../api.js'
import { clear, el } from '../dom.js'

export async function renderEnrichmentView(container: HTMLElement, api: Api): Promise<void> {
  clear(container)
  container.append(el('h2', {}, 'Dictionary enrichment candidates'))
  const candidates = await api.listEnrichment()
  if (candidates.length === 0) {
    container.append(el('p', { class: 'muted' }, 'No candidates queued.'))
    return
  }
  for (const candidate of candidates) {
    const row = el(
      'section',
      { class: 'card enrichment-card', 'data-enrichment': candidate.id },
      el('h3', {}, candidate.node.name),
      el('p', {}, candidate.node.conceptualDefinition),
    )
    if (candidate.approved) {
      row.append(el('p', { class: 'approved-badge' }, 'Approved'))
    } else {
      const button = el('button', { class: 'approve' }, 'Approve') as HTMLButtonElement
      button.addEventListener('click', async () => {
        button.disabled = true
        try {
          await api.approveEnrichment(candidate.id)
          button.replaceWith(el('p', { class: 'approved-badge' }, 'Approved'))
        } catch (error) {
          button.disabled = false
          const message =
            error instanceof ApiError ? `${error.code}: ${error.message}` : String(error)
          row.append(el('p', { class: 'error-toast' }, message))
        }
      })
      row.append(button)
    }
    container.append(row)
  }
}

/**
 * Text submission: textarea -> POST /jobs -> poll -> hand the finished job
 * to the rest of the app. Empty input is rejected inline without a request;
 * failed jobs get an error banner with a link to the reasoning trace.
 */
import type { Api, JobView } from '../api.js'
import { ApiError } from '../api.js'
import { clear, el } from '../dom.js'

export interface SubmitViewOptions {
  ragEnabled?: () => boolean
  onJobLoaded: (job: JobView) => void
  onTraceRequested?: (jobId: string) => void
}

export function renderSubmitView(container: HTMLElement, api: Api, options: SubmitViewOptions): void {
  clear(container)
  const textarea = el('textarea', {
    class: 'input-text',
    rows: '10',
    placeholder: 'Paste raw technical text here, e.g. rows from a datasheet...',
  }) as HTMLTextAreaElement
  const status = el('p', { class: 'submit-status' })
  const banner = el('div', { class: 'banner-slot' })

  const submit = async () => {
    banner.replaceChildren()
    if (!textarea.value.trim()) {
      banner.append(el('p', { class: 'inline-error' }, 'Please enter some input text first.'))
      return
    }
    status.textContent = 'Submitting...'
    try {
      const config = options.ragEnabled?.() ? { ragEnabled: true } : undefined
      const { jobId } = await api.submitJob(textarea.value, config)
      status.textContent = `Job ${jobId} running...`
      const job = await api.pollUntilSettled(jobId)
      if (job.status === 'Failed') {
        status.textContent = ''
        banner.append(failureBanner(job, options))
        return
      }
      status.textContent = `Job ${jobId} finished: ${job.nodes.length} properties generated.`
      options.onJobLoaded(job)
    } catch (error) {
      status.textContent = ''
      const message = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error)
      banner.append(el('p', { class: 'error-banner' }, message))
    }
  }

  container.append(
    el('h2', {}, 'Submit raw text'),
    textarea,
    el('div', {},
      el('button', { class: 'submit-text', onclick: () => void submit() }, 'Generate')),
    status,
    banner,
  )
}

function failureBanner(job: JobView, options: SubmitViewOptions): HTMLElement {
  const traceLink = el('a', { href: '#trace', class: 'trace-link' }, 'view reasoning trace')
  traceLink.addEventListener('click', (event) => {
    event.preventDefault()
    options.onTraceRequested?.(job.jobId)
  })
  return el(
    'div',
    { class: 'error-banner' },
    el('p', {}, `Job ${job.jobId} failed: ${job.error ?? 'unknown error'} (`),
    traceLink,
    el('p', {}, ')'),
  )
}

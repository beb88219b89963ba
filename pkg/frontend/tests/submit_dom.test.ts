import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest'

import { Api, type JobView } from '../src/api.js'
import { renderSubmitView } from '../src/views/submit.js'
import { cannedJob, flush, stubFetch } from './helpers.js'

function render(routes: Parameters<typeof stubFetch>[0] = {}, onTrace?: (id: string) => void) {
  const fetchMock = stubFetch(routes)
  const api = new Api('http://server.test/api')
  const container = document.createElement('div')
  document.body.append(container)
  const loaded: JobView[] = []
  renderSubmitView(container, api, {
    onJobLoaded: (job) => loaded.push(job),
    onTraceRequested: onTrace,
  })
  return { container, fetchMock, loaded }
}

function type(container: HTMLElement, text: string): void {
  const area = container.querySelector('textarea') as HTMLTextAreaElement
  area.value = text
}

function clickGenerate(container: HTMLElement): void {
  const button = container.querySelector('.submit-text') as HTMLElement
  button.dispatchEvent(new MouseEvent('click', { bubbles: true }))
}

beforeEach(() => {
  document.body.innerHTML = ''
})

afterEach(() => {
  vi.unstubAllGlobals()
})

describe('submit view', () => {
  it('validates empty input inline without any request', async () => {
    const { container, fetchMock } = render()
    type(container, '   ')
    clickGenerate(container)
    await flush()
    expect(container.querySelector('.inline-error')?.textContent).toContain('input text')
    expect(fetchMock).not.toHaveBeenCalled()
  })

  it('submits, polls and hands over the finished job', async () => {
    let polls = 0
    const { container, loaded } = render({
      'POST /api/jobs': () => ({ status: 202, body: { jobId: 'job-1' } }),
      'GET /api/jobs/job-1': () => {
        polls += 1
        const job = cannedJob()
        return { status: 200, body: polls < 2 ? { ...job, status: 'Running', nodes: [] } : job }
      },
    })
    type(container, 'Operating voltage: 24 V DC')
    clickGenerate(container)
    await vi.waitFor(() => expect(loaded).toHaveLength(1))
    expect(polls).toBeGreaterThanOrEqual(2)
    expect(loaded[0].nodes).toHaveLength(2)
    expect(container.querySelector('.submit-status')?.textContent).toContain('2 properties')
  })

  it('shows an error banner with a trace link for failed jobs', async () => {
    const failed = { ...cannedJob(), status: 'Failed', nodes: [], error: 'extraction: boom' }
    const traced: string[] = []
    const { container } = render(
      {
        'POST /api/jobs': () => ({ status: 202, body: { jobId: 'job-1' } }),
        'GET /api/jobs/job-1': () => ({ status: 200, body: failed }),
      },
      (jobId) => traced.push(jobId),
    )
    type(container, 'garbage in')
    clickGenerate(container)
    await vi.waitFor(() =>
      expect(container.querySelector('.error-banner')?.textContent).toContain('extraction: boom'),
    )
    const link = container.querySelector('.trace-link') as HTMLElement
    link.dispatchEvent(new MouseEvent('click', { bubbles: true }))
    expect(traced).toEqual(['job-1'])
  })

  it('surfaces submission rejections from the service', async () => {
    const { container } = render({
      'POST /api/jobs': () => ({
        status: 409,
        body: { code: 'no_dictionary_index', message: 'no dictionary index is loaded' },
      }),
    })
    type(container, 'some text')
    clickGenerate(container)
    await vi.waitFor(() =>
      expect(container.querySelector('.error-banner')?.textContent).toContain(
        'no_dictionary_index',
      ),
    )
  })
})

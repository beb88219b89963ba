/** App bootstrap: tab navigation wiring the views to one current job. */
import { Api, type JobView } from './api.js'
import { clear, el } from './dom.js'
import { renderEnrichmentView } from './views/enrichment.js'
import { renderInspectView } from './views/inspect.js'
import { renderReviewView } from './views/review.js'
import { renderSubmitView } from './views/submit.js'

const TABS = ['submit', 'review', 'inspect', 'enrichment'] as const
type Tab = (typeof TABS)[number]

export async function boot(root: HTMLElement): Promise<void> {
  let api = new Api('/api')
  try {
    const { apiBase } = await api.uiConfig()
    api = new Api(apiBase)
  } catch {
    // keep the default base when the config endpoint is unreachable
  }

  let currentJob: JobView | null = null

  const annotatorInput = el('input', {
    class: 'annotator-id',
    value: localStorage.getItem('annotatorId') ?? 'anonymous',
  }) as HTMLInputElement
  annotatorInput.addEventListener('change', () =>
    localStorage.setItem('annotatorId', annotatorInput.value),
  )

  const content = el('main', { class: 'content' })
  const nav = el('nav', { class: 'tabs' })
  const buttons = new Map<Tab, HTMLButtonElement>()

  const show = (tab: Tab) => {
    for (const [name, button] of buttons) {
      button.classList.toggle('active', name === tab)
    }
    clear(content)
    switch (tab) {
      case 'submit':
        renderSubmitView(content, api, {
          onJobLoaded: (job) => {
            currentJob = job
            show('review')
          },
          onTraceRequested: () => show('inspect'),
        })
        break
      case 'review':
        if (currentJob) {
          renderReviewView(content, api, currentJob, {
            annotatorId: () => annotatorInput.value || 'anonymous',
          })
        } else {
          content.append(el('p', { class: 'muted' }, 'Submit a text first.'))
        }
        break
      case 'inspect':
        if (currentJob) {
          void renderInspectView(content, api, currentJob)
        } else {
          content.append(el('p', { class: 'muted' }, 'Submit a text first.'))
        }
        break
      case 'enrichment':
        void renderEnrichmentView(content, api)
        break
    }
  }

  for (const tab of TABS) {
    const button = el('button', { class: `tab-${tab}`, onclick: () => show(tab) }, tab)
    buttons.set(tab, button as HTMLButtonElement)
    nav.append(button)
  }

  clear(root)
  root.append(
    el('header', {},
      el('h1', {}, 'AAS generation review'),
      el('label', {}, 'Annotator: ', annotatorInput)),
    nav,
    content,
  )
  show('submit')
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  void boot(document.getElementById('app') as HTMLElement)
}

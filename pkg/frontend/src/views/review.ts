/**
 * Rating workflow: one card per generated property.
 *
 * A card first shows only the property's name and value together with the
 * comprehension question. The generated texts (conceptual definition,
 * affordance, ...) enter the DOM only after the question is answered and
 * the reviewer reveals them; the ten-decision form then opens. Helpfulness
 * is rendered as a disabled "N/A" control when comprehension was affirmed,
 * keeping all ten decision slots visible.
 */
import type { Api, JobView, NodeRecord } from '../api.js'
import { ApiError } from '../api.js'
import { clear, el } from '../dom.js'
import {
  ELEMENTS,
  type PropertyReview,
  type ReviewAction,
  canSubmit,
  initialReview,
  ratingPayload,
  reviewReducer,
} from '../state.js'

export interface ReviewViewOptions {
  annotatorId: () => string
  onRated?: (sampleId: string) => void
}

export function renderReviewView(
  container: HTMLElement,
  api: Api,
  job: JobView,
  options: ReviewViewOptions,
): void {
  clear(container)
  if (job.status !== 'Done') {
    container.append(el('p', { class: 'muted' }, 'No finished job to review yet.'))
    return
  }
  const heading = el('h2', {}, `Review ${job.nodes.length} generated properties`)
  container.append(heading)
  // nodes arrive in source order from the API and are rendered in that order
  job.nodes.forEach((node, index) => {
    const sampleId = job.sampleIds[index]
    container.append(propertyCard(api, job, node, sampleId, options))
  })
}

function propertyCard(
  api: Api,
  job: JobView,
  node: NodeRecord,
  sampleId: string,
  options: ReviewViewOptions,
): HTMLElement {
  let state: PropertyReview = initialReview(sampleId)
  const card = el('section', { class: 'card', 'data-sample': sampleId })

  const dispatch = (action: ReviewAction) => {
    state = reviewReducer(state, action)
    render()
  }

  const submit = async () => {
    const payload = ratingPayload(state, options.annotatorId())
    if (payload === null) return
    try {
      await api.postRating(job.jobId, payload)
      dispatch({ type: 'markRated' })
      options.onRated?.(sampleId)
    } catch (error) {
      showError(card, error)
    }
  }

  function render(): void {
    clear(card)
    card.append(
      el('h3', {}, node.name),
      el('p', { class: 'value-line' }, el('strong', {}, 'Value: '), node.value),
    )
    switch (state.phase) {
      case 'Unseen':
        card.append(comprehensionQuestion(dispatch))
        break
      case 'ComprehensionAnswered':
        card.append(
          el('button', { class: 'reveal', onclick: () => dispatch({ type: 'disclose' }) },
            'Reveal generated texts'),
        )
        break
      case 'Disclosed':
        card.append(generatedTexts(node), ratingForm(state, dispatch, submit))
        break
      case 'Rated':
        card.append(generatedTexts(node), el('p', { class: 'rated-badge' }, 'Rating recorded.'))
        break
    }
  }

  render()
  return card
}

function comprehensionQuestion(dispatch: (a: ReviewAction) => void): HTMLElement {
  return el(
    'div',
    { class: 'comprehension' },
    el('p', {}, 'Do you understand this technical property from its name and value alone?'),
    el('button', {
      class: 'comprehended-yes',
      onclick: () => dispatch({ type: 'answerComprehension', comprehended: true }),
    }, 'Yes'),
    el('button', {
      class: 'comprehended-no',
      onclick: () => dispatch({ type: 'answerComprehension', comprehended: false }),
    }, 'No'),
  )
}

/** Only ever called from Disclosed/Rated; this is what progressive disclosure hides. */
function generatedTexts(node: NodeRecord): HTMLElement {
  const rows: HTMLElement[] = [
    textRow('Conceptual definition', node.conceptualDefinition, 'generated-definition'),
    textRow('Usage of data (affordance)', node.affordance, 'generated-affordance'),
    textRow('Value type', node.valueType, 'generated-value-type'),
  ]
  if (node.unit !== undefined) rows.push(textRow('Unit', node.unit, 'generated-unit'))
  if (node.sourceDescription !== undefined) {
    rows.push(textRow('Source description', node.sourceDescription, 'generated-source'))
  }
  if (node.semanticId) {
    rows.push(textRow('Semantic reference', `${node.semanticId.kind}: ${node.semanticId.iri}`, 'generated-ref'))
  }
  return el('div', { class: 'generated-texts' }, ...rows)
}

function textRow(label: string, text: string, cls: string): HTMLElement {
  return el('p', { class: cls }, el('strong', {}, `${label}: `), text)
}

function scoreSelect(
  name: string,
  value: number | null,
  onChange: (value: number) => void,
  disabledAsNa = false,
): HTMLElement {
  const select = el('select', { name }) as HTMLSelectElement
  if (disabledAsNa) {
    select.append(el('option', { value: '' }, 'N/A'))
    select.disabled = true
    select.value = ''
  } else {
    select.append(el('option', { value: '' }, '-'))
    for (let score = 1; score <= 5; score++) {
      select.append(el('option', { value: String(score) }, String(score)))
    }
    select.value = value === null ? '' : String(value)
    select.addEventListener('change', () => {
      if (select.value !== '') onChange(Number(select.value))
    })
  }
  return el('label', { class: `score-${name}` }, `${name}: `, select)
}

function ratingForm(
  state: PropertyReview,
  dispatch: (a: ReviewAction) => void,
  submit: () => void,
): HTMLElement {
  const flags = el(
    'fieldset',
    { class: 'flags' },
    el('legend', {}, 'Inaccurate elements'),
    ...ELEMENTS.map((element) => {
      const box = el('input', { type: 'checkbox', name: `inaccurate-${element}` }) as HTMLInputElement
      box.checked = state.draft.inaccurate[element]
      box.addEventListener('change', () =>
        dispatch({ type: 'setFlag', element, inaccurate: box.checked }),
      )
      return el('label', {}, box, ` ${element}`)
    }),
  )

  const scores = el(
    'fieldset',
    { class: 'scores' },
    el('legend', {}, 'Quality ratings (1-5)'),
    scoreSelect('definition', state.draft.definitionRating, (v) =>
      dispatch({ type: 'setScore', field: 'definition', value: v })),
    scoreSelect('affordance', state.draft.affordanceRating, (v) =>
      dispatch({ type: 'setScore', field: 'affordance', value: v })),
    scoreSelect(
      'helpfulness',
      state.draft.helpfulnessRating,
      (v) => dispatch({ type: 'setScore', field: 'helpfulness', value: v }),
      state.comprehended === true,
    ),
    scoreSelect('overall', state.draft.overallRating, (v) =>
      dispatch({ type: 'setScore', field: 'overall', value: v })),
  )

  const submitButton = el('button', { class: 'submit-rating' }, 'Submit rating') as HTMLButtonElement
  submitButton.disabled = !canSubmit(state)
  submitButton.addEventListener('click', submit)

  return el('form', { class: 'rating-form', onsubmit: (e: Event) => e.preventDefault() },
    flags, scores, submitButton)
}

function showError(card: HTMLElement, error: unknown): void {
  const previous = card.querySelector('.error-toast')
  if (previous) previous.remove()
  const message =
    error instanceof ApiError ? `${error.code}: ${error.message}` : String(error)
  card.append(el('p', { class: 'error-toast' }, message))
}

/**
 * Per-property review state machine.
 *
 * Every property walks Unseen -> ComprehensionAnswered -> Disclosed -> Rated.
 * The generated definition/affordance texts may only be shown from Disclosed
 * on, and a rating can only be submitted from Disclosed. Invalid actions
 * leave the state unchanged, so the UI cannot corrupt the flow no matter
 * what it dispatches.
 */
import type { RatingPayload } from './api.js'

export type Phase = 'Unseen' | 'ComprehensionAnswered' | 'Disclosed' | 'Rated'

export const ELEMENTS = ['name', 'value', 'definition', 'affordance', 'unit'] as const
export type ElementName = (typeof ELEMENTS)[number]

export interface RatingDraft {
  inaccurate: Record<ElementName, boolean>
  definitionRating: number | null
  affordanceRating: number | null
  helpfulnessRating: number | null
  overallRating: number | null
}

export interface PropertyReview {
  sampleId: string
  phase: Phase
  comprehended: boolean | null
  draft: RatingDraft
}

export type ReviewAction =
  | { type: 'answerComprehension'; comprehended: boolean }
  | { type: 'disclose' }
  | { type: 'setFlag'; element: ElementName; inaccurate: boolean }
  | { type: 'setScore'; field: 'definition' | 'affordance' | 'helpfulness' | 'overall'; value: number }
  | { type: 'markRated' }

export function initialReview(sampleId: string): PropertyReview {
  return {
    sampleId,
    phase: 'Unseen',
    comprehended: null,
    draft: {
      inaccurate: { name: false, value: false, definition: false, affordance: false, unit: false },
      definitionRating: null,
      affordanceRating: null,
      helpfulnessRating: null,
      overallRating: null,
    },
  }
}

function validScore(value: number): boolean {
  return Number.isInteger(value) && value >= 1 && value <= 5
}

export function reviewReducer(state: PropertyReview, action: ReviewAction): PropertyReview {
  switch (action.type) {
    case 'answerComprehension':
      if (state.phase !== 'Unseen') return state
      return { ...state, phase: 'ComprehensionAnswered', comprehended: action.comprehended }

    case 'disclose':
      if (state.phase !== 'ComprehensionAnswered') return state
      return { ...state, phase: 'Disclosed' }

    case 'setFlag':
      if (state.phase !== 'Disclosed') return state
      return {
        ...state,
        draft: {
          ...state.draft,
          inaccurate: { ...state.draft.inaccurate, [action.element]: action.inaccurate },
        },
      }

    case 'setScore': {
      if (state.phase !== 'Disclosed' || !validScore(action.value)) return state
      // helpfulness only exists for properties that were not comprehended up front
      if (action.field === 'helpfulness' && state.comprehended !== false) return state
      const key = `${action.field}Rating` as const
      return { ...state, draft: { ...state.draft, [key]: action.value } }
    }

    case 'markRated':
      if (!canSubmit(state)) return state
      return { ...state, phase: 'Rated' }
  }
}

/** A rating may leave the client only from Disclosed with a complete draft. */
export function canSubmit(state: PropertyReview): boolean {
  if (state.phase !== 'Disclosed' || state.comprehended === null) return false
  const d = state.draft
  if (d.definitionRating === null || d.affordanceRating === null || d.overallRating === null) {
    return false
  }
  if (state.comprehended === false && d.helpfulnessRating === null) return false
  return true
}

export function ratingPayload(state: PropertyReview, annotatorId: string): RatingPayload | null {
  if (!canSubmit(state)) return null
  const d = state.draft
  return {
    sampleId: state.sampleId,
    annotatorId,
    comprehendedInitially: state.comprehended as boolean,
    inaccurateName: d.inaccurate.name,
    inaccurateValue: d.inaccurate.value,
    inaccurateDefinition: d.inaccurate.definition,
    inaccurateAffordance: d.inaccurate.affordance,
    inaccurateUnit: d.inaccurate.unit,
    definitionRating: d.definitionRating as number,
    affordanceRating: d.affordanceRating as number,
    helpfulnessRating: state.comprehended ? null : d.helpfulnessRating,
    overallRating: d.overallRating as number,
  }
}

/**
 * Inspection: the environment file as a collapsible tree (values rendered
 * verbatim), a download link for the exact stored bytes, and the agent
 * reasoning details from the trace.
 */
import type { Api, JobView, TraceRecord, TraceView } from '../api.js'
import { clear, el } from '../dom.js'

interface EnvironmentDoc {
  assetAdministrationShells: { idShort: string; assetInformation: { globalAssetId: string } }[]
  submodels: { idShort: string; submodelElements: PropertyDoc[] }[]
  conceptDescriptions: ConceptDoc[]
}

interface PropertyDoc {
  idShort: string
  valueType: string
  value: string
  semanticId: { type: string; keys: { type: string; value: string }[] }
}

interface ConceptDoc {
  id: string
  preferredName: string
  definition: string
  affordanceNote: string
  unit?: string
}

export async function renderInspectView(container: HTMLElement, api: Api, job: JobView): Promise<void> {
  clear(container)
  if (job.status !== 'Done') {
    container.append(el('p', { class: 'muted' }, 'The environment is available once a job is Done.'))
    return
  }
  const download = el('a', {
    class: 'download-aas',
    href: api.aasUrl(job.jobId),
    download: `${job.jobId}.aas.json`,
  }, 'Download AAS environment')
  container.append(el('h2', {}, 'Generated AAS instance model'), download)

  const text = await api.fetchAas(job.jobId)
  const doc = JSON.parse(text) as EnvironmentDoc
  container.append(environmentTree(doc))

  container.append(el('h2', {}, 'LLM reasoning details'))
  container.append(traceSection(await api.getTrace(job.jobId)))
}

function environmentTree(doc: EnvironmentDoc): HTMLElement {
  const conceptsById = new Map(doc.conceptDescriptions.map((c) => [c.id, c]))
  const shell = doc.assetAdministrationShells[0]
  const shellNode = el(
    'details',
    { class: 'tree-shell', open: true },
    el('summary', {}, `Shell ${shell.idShort}`),
    el('p', {}, `Asset: ${shell.assetInformation.globalAssetId}`),
    ...doc.submodels.map((submodel) =>
      el(
        'details',
        { class: 'tree-submodel', open: true },
        el('summary', {}, `Submodel ${submodel.idShort}`),
        ...submodel.submodelElements.map((property) => propertyNode(property, conceptsById)),
      ),
    ),
  )
  return el('div', { class: 'environment-tree' }, shellNode)
}

function propertyNode(property: PropertyDoc, conceptsById: Map<string, ConceptDoc>): HTMLElement {
  const reference = property.semanticId.keys[0]?.value ?? ''
  const children: (HTMLElement | string)[] = [
    el('summary', {}, `${property.idShort} = ${property.value}`),
    el('p', {}, `valueType: ${property.valueType}`),
    el('p', {}, `semanticId (${property.semanticId.type}): ${reference}`),
  ]
  const concept = conceptsById.get(reference)
  if (concept) {
    children.push(
      el(
        'details',
        { class: 'tree-concept' },
        el('summary', {}, `ConceptDescription ${concept.preferredName}`),
        el('p', { class: 'concept-definition' }, `definition: ${concept.definition}`),
        el('p', { class: 'concept-affordance' }, `affordance: ${concept.affordanceNote}`),
        ...(concept.unit !== undefined ? [el('p', {}, `unit: ${concept.unit}`)] : []),
      ),
    )
  }
  return el('details', { class: 'tree-property' }, ...children)
}

function traceSection(trace: TraceView): HTMLElement {
  const retrievals = trace.records.filter((r) => r.stage === 'retrieval')
  const wrapper = el('div', { class: 'trace' })
  wrapper.append(
    el('p', {}, `Retrieval augmentation: ${trace.ragEnabled ? 'on' : 'off'}; `
      + `total ${Math.round(trace.totalLatencyMs)} ms`),
  )
  const retrievalBlock = el('div', { class: 'trace-retrievals' })
  if (retrievals.length === 0) {
    retrievalBlock.append(el('p', { class: 'muted' }, 'No retrieval records.'))
  } else {
    retrievals.forEach((record) => retrievalBlock.append(retrievalNode(record)))
  }
  wrapper.append(el('h3', {}, 'Retrieval'), retrievalBlock)

  const synthBlock = el('div', { class: 'trace-syntheses' })
  trace.records
    .filter((r) => r.stage === 'synthesis')
    .forEach((record) => synthBlock.append(synthesisNode(record)))
  wrapper.append(el('h3', {}, 'Synthesis'), synthBlock)

  const errors = trace.records.filter((r) => r.stage === 'error')
  if (errors.length > 0) {
    wrapper.append(
      el('h3', {}, 'Errors'),
      ...errors.map((r) => el('p', { class: 'trace-error' }, JSON.stringify(r.detail))),
    )
  }
  return wrapper
}

function retrievalNode(record: TraceRecord): HTMLElement {
  const hits = (record.detail.hits as { entryId: string; score: number }[]) ?? []
  return el(
    'details',
    { class: 'trace-retrieval' },
    el('summary', {}, `${record.candidate}: ${hits.length} hits`),
    ...hits.map((hit) => el('p', {}, `${hit.entryId} (score ${hit.score.toFixed(4)})`)),
  )
}

function synthesisNode(record: TraceRecord): HTMLElement {
  const judgments = (record.detail.judgments as { entryId: string; relevant: boolean; reason: string }[]) ?? []
  return el(
    'details',
    { class: 'trace-synthesis' },
    el('summary', {}, `${record.candidate} (${Math.round(record.latencyMs)} ms)`),
    ...judgments.map((j) =>
      el('p', { class: 'judgment' }, `${j.relevant ? 'relevant' : 'not relevant'}: ${j.entryId} (${j.reason})`),
    ),
    el('details', {}, el('summary', {}, 'raw output'), el('pre', {}, record.rawOutput ?? '')),
  )
}

/**
 * Typed client for the generation service HTTP API.
 * The UI talks to the backend exclusively through this module.
 */

export interface SemanticIdRef {
  kind: 'ExternalDictionary' | 'GeneratedConcept'
  iri: string
}

export interface NodeRecord {
  name: string
  conceptualDefinition: string
  affordance: string
  value: string
  valueType: string
  unit?: string
  sourceDescription?: string
  semanticId?: SemanticIdRef
}

export type JobStatus = 'Pending' | 'Running' | 'Done' | 'Failed'

export interface JobView {
  jobId: string
  status: JobStatus
  configId: string
  createdAt: number
  error: string | null
  nodes: NodeRecord[]
  sampleIds: string[]
}

export interface TraceRecord {
  stage: string
  candidate: string | null
  prompt: string | null
  rawOutput: string | null
  detail: Record<string, unknown>
  latencyMs: number
}

export interface TraceView {
  ragEnabled: boolean
  totalLatencyMs: number
  records: TraceRecord[]
}

export interface RatingPayload {
  sampleId: string
  annotatorId: string
  comprehendedInitially: boolean
  inaccurateName: boolean
  inaccurateValue: boolean
  inaccurateDefinition: boolean
  inaccurateAffordance: boolean
  inaccurateUnit: boolean
  definitionRating: number
  affordanceRating: number
  helpfulnessRating: number | null
  overallRating: number
}

export interface ConfigMetricsView {
  configId: string
  sampleCount: number
  passRate: number
  helpfulnessScore: number | null
  meanOverall: number
  meanDefinition: number
  meanAffordance: number
  inaccuracyRates: Record<string, number>
}

export interface MetricsView {
  configs: ConfigMetricsView[]
  ablation: unknown[]
  durationRatio: Record<string, number>
}

export interface EnrichmentCandidate {
  id: string
  approved: boolean
  node: NodeRecord
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message)
  }
}

async function readError(response: Response): Promise<ApiError> {
  let code = 'unknown'
  let message = response.statusText
  try {
    const body = await response.json()
    code = body.code ?? code
    message = body.message ?? message
  } catch {
    // body was not JSON; keep the status text
  }
  return new ApiError(response.status, code, message)
}

export class Api {
  constructor(public base: string = '/api') {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init)
    if (!response.ok) {
      throw await readError(response)
    }
    return (await response.json()) as T
  }

  async uiConfig(): Promise<{ apiBase: string }> {
    return this.request('/ui-config')
  }

  async submitJob(
    inputText: string,
    config?: Record<string, unknown>,
  ): Promise<{ jobId: string }> {
    return this.request('/jobs', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(config ? { inputText, config } : { inputText }),
    })
  }

  async getJob(jobId: string): Promise<JobView> {
    return this.request(`/jobs/${jobId}`)
  }

  /** Poll until the job leaves Pending/Running. */
  async pollUntilSettled(jobId: string, intervalMs = 150, timeoutMs = 60_000): Promise<JobView> {
    const deadline = Date.now() + timeoutMs
    for (;;) {
      const job = await this.getJob(jobId)
      if (job.status === 'Done' || job.status === 'Failed') {
        return job
      }
      if (Date.now() > deadline) {
        throw new ApiError(0, 'timeout', `job ${jobId} did not settle in ${timeoutMs} ms`)
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs))
    }
  }

  aasUrl(jobId: string): string {
    return `${this.base}/jobs/${jobId}/aas`
  }

  /** The environment file, verbatim. */
  async fetchAas(jobId: string): Promise<string> {
    const response = await fetch(this.aasUrl(jobId))
    if (!response.ok) {
      throw await readError(response)
    }
    return response.text()
  }

  async getTrace(jobId: string): Promise<TraceView> {
    return this.request(`/jobs/${jobId}/trace`)
  }

  async postRating(jobId: string, rating: RatingPayload): Promise<void> {
    await this.request(`/jobs/${jobId}/ratings`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(rating),
    })
  }

  async getMetrics(configId?: string): Promise<MetricsView> {
    const query = configId ? `?config=${encodeURIComponent(configId)}` : ''
    return this.request(`/metrics${query}`)
  }

  async listEnrichment(): Promise<EnrichmentCandidate[]> {
    const body = await this.request<{ candidates: EnrichmentCandidate[] }>('/enrichment')
    return body.candidates
  }

  async approveEnrichment(id: string): Promise<void> {
    await this.request(`/enrichment/${id}/approve`, { method: 'POST' })
  }
}

/** Test helpers: a routable fetch stub and a canned job. */
import { vi } from 'vitest'

import type { JobView } from '../src/api.js'

export type Route = (init?: RequestInit) => { status: number; body: unknown }

/** Install a fetch stub; routes are matched as "METHOD path" string prefixes. */
export function stubFetch(routes: Record<string, Route>): ReturnType<typeof vi.fn> {
  const mock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input)
    const method = init?.method ?? 'GET'
    const path = url.replace(/^https?:\/\/[^/]+/, '')
    const key = Object.keys(routes).find((candidate) => `${method} ${path}`.startsWith(candidate))
    if (!key) {
      throw new Error(`no stub route for ${method} ${path}`)
    }
    const { status, body } = routes[key](init)
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'content-type': 'application/json' },
    })
  })
  vi.stubGlobal('fetch', mock)
  return mock
}

export function cannedJob(): JobView {
  return {
    jobId: 'job-1',
    status: 'Done',
    configId: 'stub-model:norag',
    createdAt: 1,
    error: null,
    nodes: [
      {
        name: 'Operating voltage',
        conceptualDefinition: 'Nominal electric potential difference required to power the device.',
        affordance: 'Used to select a matching power supply.',
        value: '24 V DC',
        valueType: 'String',
        unit: 'V',
        sourceDescription: 'Electrical section.',
        semanticId: { kind: 'GeneratedConcept', iri: 'https://c.example/concept/1' },
      },
      {
        name: 'Weight',
        conceptualDefinition: 'Mass of the bare device.',
        affordance: 'Used for mounting design.',
        value: '250 g',
        valueType: 'String',
        unit: 'g',
        semanticId: { kind: 'ExternalDictionary', iri: 'https://dict.example/def/weight' },
      },
    ],
    sampleIds: ['OperatingVoltage', 'Weight'],
  }
}

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0))
}

import { useCallback, useEffect, useRef, useState } from 'react'

import { ApiClient, ApiError, LabelValue, Progress, ReviewDoc } from './api'

export interface ReviewSessionState {
  progress: Progress | null
  doc: ReviewDoc | null
  stopReason: string | null
  recheckDoc: ReviewDoc | null
  error: string | null
  retryValue: LabelValue | null
  submitLabel: (value: LabelValue) => Promise<void>
  retry: () => Promise<void>
  submitRecheck: (value: LabelValue) => Promise<void>
  buildRecheckQueue: (method: 'disagreement' | 'knee', budget: number) => Promise<void>
}

// All state here is a cache of server responses; reloading the page and
// replaying getProgress/getNext reconstructs exactly the same view.
export function useReviewSession(
  client: ApiClient,
  sessionId: string,
  reviewer: string,
): ReviewSessionState {
  const [progress, setProgress] = useState<Progress | null>(null)
  const [doc, setDoc] = useState<ReviewDoc | null>(null)
  const [stopReason, setStopReason] = useState<string | null>(null)
  const [recheckDoc, setRecheckDoc] = useState<ReviewDoc | null>(null)
  const [error, setError] = useState<string | null>(null)
  const [retryValue, setRetryValue] = useState<LabelValue | null>(null)
  const submitting = useRef(false)

  const loadNext = useCallback(async () => {
    const batch = await client.getNext(sessionId, reviewer, 1)
    setDoc(batch.documents[0] ?? null)
    setStopReason(batch.stop_reason)
  }, [client, sessionId, reviewer])

  const loadRecheck = useCallback(
    async (snapshot: Progress) => {
      if (snapshot.pending_recheck > 0) {
        const batch = await client.nextRecheck(sessionId, 1)
        setRecheckDoc(batch.documents[0] ?? null)
      } else {
        setRecheckDoc(null)
      }
    },
    [client, sessionId],
  )

  const refresh = useCallback(async () => {
    const snapshot = await client.getProgress(sessionId)
    setProgress(snapshot)
    await loadRecheck(snapshot)
  }, [client, sessionId, loadRecheck])

  useEffect(() => {
    let cancelled = false
    ;(async () => {
      try {
        await refresh()
        if (!cancelled) await loadNext()
      } catch (e) {
        if (!cancelled) setError(e instanceof Error ? e.message : String(e))
      }
    })()
    return () => {
      cancelled = true
    }
  }, [refresh, loadNext])

  const post = useCallback(
    async (target: ReviewDoc, value: LabelValue, recheck: boolean) => {
      // one in-flight submission at a time: repeated clicks on the same
      // document cannot produce a second label
      if (submitting.current) return
      submitting.current = true
      try {
        const outcome = await client.postLabel(sessionId, {
          doc_id: target.doc_id,
          reviewer,
          value,
          ...(recheck ? { recheck: true } : {}),
        })
        setProgress(outcome)
        setError(null)
        setRetryValue(null)
        if (recheck) {
          await loadRecheck(outcome)
        } else {
          setDoc(null)
          await loadNext()
          await loadRecheck(outcome)
        }
      } catch (e) {
        if (e instanceof ApiError && e.status === 409) {
          // someone else got there first: surface it and fetch a fresh doc
          setError(`conflict: ${e.message}`)
          if (recheck) {
            await refresh()
          } else {
            setDoc(null)
            await loadNext()
          }
        } else {
          // network trouble: keep the document on screen, offer a retry
          setError('label not saved; check the connection and retry')
          if (!recheck) setRetryValue(value)
        }
      } finally {
        submitting.current = false
      }
    },
    [client, sessionId, reviewer, loadNext, loadRecheck, refresh],
  )

  const submitLabel = useCallback(
    async (value: LabelValue) => {
      if (doc) await post(doc, value, false)
    },
    [doc, post],
  )

  const retry = useCallback(async () => {
    if (doc && retryValue) await post(doc, retryValue, false)
  }, [doc, retryValue, post])

  const submitRecheck = useCallback(
    async (value: LabelValue) => {
      if (recheckDoc) await post(recheckDoc, value, true)
    },
    [recheckDoc, post],
  )

  const buildRecheckQueue = useCallback(
    async (method: 'disagreement' | 'knee', budget: number) => {
      try {
        await client.buildRecheckQueue(sessionId, method, budget)
        await refresh()
      } catch (e) {
        setError(e instanceof Error ? e.message : String(e))
      }
    },
    [client, sessionId, refresh],
  )

  return {
    progress,
    doc,
    stopReason,
    recheckDoc,
    error,
    retryValue,
    submitLabel,
    retry,
    submitRecheck,
    buildRecheckQueue,
  }
}

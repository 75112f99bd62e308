import { useCallback, useEffect } from 'react'

interface KeyboardLabelingActions {
  onRelevant: () => void
  onIrrelevant: () => void
  enabled: boolean
}

// r = relevant, i = irrelevant; inactive while typing in form fields.
export function useKeyboardLabeling({ onRelevant, onIrrelevant, enabled }: KeyboardLabelingActions) {
  const handleKeyDown = useCallback(
    (e: KeyboardEvent) => {
      if (!enabled) return
      const target = e.target as HTMLElement
      if (target.tagName === 'INPUT' || target.tagName === 'TEXTAREA' || target.isContentEditable) {
        return
      }
      if (e.key === 'r') {
        e.preventDefault()
        onRelevant()
      } else if (e.key === 'i') {
        e.preventDefault()
        onIrrelevant()
      }
    },
    [enabled, onRelevant, onIrrelevant],
  )

  useEffect(() => {
    if (!enabled) return
    window.addEventListener('keydown', handleKeyDown)
    return () => window.removeEventListener('keydown', handleKeyDown)
  }, [enabled, handleKeyDown])
}

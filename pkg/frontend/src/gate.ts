export interface RequestGate {
  next: () => number;
  isLatest: (token: number) => boolean;
  reset: () => void;
}

// "Latest call wins" token source; stale async results check isLatest
// before touching UI state.
export function createRequestGate(): RequestGate {
  let current = 0;
  return {
    next() {
      current += 1;
      return current;
    },
    isLatest(token: number) {
      return token === current;
    },
    reset() {
      current += 1;
    },
  };
}

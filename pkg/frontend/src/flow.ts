// Screen-flow state machine.
//
// First-run users travel splash -> language -> auth -> main; returning users
// (stored language + credentials) jump splash -> main directly, so the
// language selector appears at most once. While an adventure is active the
// flow is forward-only: navigation away is rejected until the session
// completes or is abandoned at the prompt level.

export type Route =
  | "splash"
  | "language"
  | "auth"
  | "main"
  | "selector"
  | "detail"
  | "stage"
  | "quiz_result"
  | "awards"
  | "leaderboard"
  | "feedback"
  | "institutional";

export interface FlowState {
  route: Route;
  language: string | null;
  token: string | null;
  userId: string | null;
  adventureId: string | null;
  sessionId: string | null;
  inAdventure: boolean;
  languageScreenShown: number;
}

export type FlowEvent =
  | { kind: "boot"; storedLanguage: string | null; storedToken: string | null; storedUserId: string | null }
  | { kind: "splash_done" }
  | { kind: "language_chosen"; language: string }
  | { kind: "authed"; token: string; userId: string }
  | { kind: "nav"; to: Route }
  | { kind: "adventure_selected"; adventureId: string }
  | { kind: "adventure_started"; sessionId: string }
  | { kind: "session_completed" }
  | { kind: "logout" };

const MENU_ROUTES: readonly Route[] = [
  "main",
  "selector",
  "detail",
  "awards",
  "leaderboard",
  "feedback",
  "institutional",
];

export function initialState(): FlowState {
  return {
    route: "splash",
    language: null,
    token: null,
    userId: null,
    adventureId: null,
    sessionId: null,
    inAdventure: false,
    languageScreenShown: 0,
  };
}

export function reduce(state: FlowState, event: FlowEvent): FlowState {
  switch (event.kind) {
    case "boot":
      return {
        ...initialState(),
        language: event.storedLanguage,
        token: event.storedToken,
        userId: event.storedUserId,
      };

    case "splash_done": {
      if (!state.language) {
        return { ...state, route: "language", languageScreenShown: state.languageScreenShown + 1 };
      }
      if (!state.token) {
        return { ...state, route: "auth" };
      }
      return { ...state, route: "main" };
    }

    case "language_chosen": {
      const next: Route = state.token ? "main" : "auth";
      return { ...state, language: event.language, route: next };
    }

    case "authed":
      return { ...state, token: event.token, userId: event.userId, route: "main" };

    case "nav": {
      if (state.inAdventure) return state; // one-way until the adventure ends
      if (!MENU_ROUTES.includes(event.to)) return state;
      if (!state.token) return state;
      return { ...state, route: event.to };
    }

    case "adventure_selected": {
      if (state.inAdventure || !state.token) return state;
      return { ...state, adventureId: event.adventureId, route: "detail" };
    }

    case "adventure_started":
      return { ...state, sessionId: event.sessionId, inAdventure: true, route: "stage" };

    case "session_completed":
      return { ...state, inAdventure: false, route: "quiz_result" };

    case "logout":
      return { ...initialState(), language: state.language, route: "auth" };
  }
}

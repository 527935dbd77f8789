// Typed client over the service's JSON endpoints.

import type {
  AnswerResponse,
  AuthResult,
  CatalogResponse,
  LeaderboardEntry,
  ProgressResponse,
  ScanEventWire,
  SessionDoc,
  StartSessionResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  token: string | null = null;
  userId: string | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const res = await this.fetchFn(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    const payload = text ? JSON.parse(text) : null;
    if (!res.ok) {
      const code = payload?.code ?? "UnknownError";
      const message = payload?.message ?? `request failed with ${res.status}`;
      throw new ApiError(res.status, code, message);
    }
    return payload as T;
  }

  async register(loginId: string, secret: string): Promise<AuthResult> {
    const result = await this.request<AuthResult>("POST", "/auth/register", {
      login_id: loginId,
      secret,
    });
    this.token = result.token;
    this.userId = result.user_id;
    return result;
  }

  async login(loginId: string, secret: string): Promise<AuthResult> {
    const result = await this.request<AuthResult>("POST", "/auth/login", {
      login_id: loginId,
      secret,
    });
    this.token = result.token;
    this.userId = result.user_id;
    return result;
  }

  catalog(lang: string): Promise<CatalogResponse> {
    return this.request("GET", `/catalog?lang=${encodeURIComponent(lang)}`);
  }

  startSession(adventureId: string, confirmReplay = false): Promise<StartSessionResponse> {
    return this.request("POST", "/sessions", {
      adventure_id: adventureId,
      confirm_replay: confirmReplay,
    });
  }

  session(sessionId: string, lang: string): Promise<SessionDoc> {
    return this.request("GET", `/sessions/${sessionId}?lang=${encodeURIComponent(lang)}`);
  }

  resume(sessionId: string, choice: "resume" | "restart"): Promise<SessionDoc> {
    return this.request("POST", `/sessions/${sessionId}/resume`, { choice });
  }

  advance(sessionId: string, input: "ack" | "gate" | "quiz"): Promise<{ session: SessionDoc }> {
    return this.request("POST", `/sessions/${sessionId}/advance`, { input });
  }

  answer(sessionId: string, questionIndex: number, choiceIndex: number): Promise<AnswerResponse> {
    return this.request("POST", `/sessions/${sessionId}/answer`, {
      question_index: questionIndex,
      choice_index: choiceIndex,
    });
  }

  scanEvents(sessionId: string, events: ScanEventWire[]): Promise<{ accepted: number; gate_unlocked: boolean }> {
    return this.request("POST", `/sessions/${sessionId}/scan-events`, { events });
  }

  progress(userId: string, lang: string): Promise<ProgressResponse> {
    return this.request("GET", `/users/${userId}/progress?lang=${encodeURIComponent(lang)}`);
  }

  setLanguage(userId: string, language: string): Promise<unknown> {
    return this.request("POST", `/users/${userId}/language`, { language });
  }

  leaderboard(n = 10): Promise<{ entries: LeaderboardEntry[] }> {
    return this.request("GET", `/leaderboard?n=${n}`);
  }

  feedback(userId: string, text: string): Promise<unknown> {
    return this.request("POST", `/users/${userId}/feedback`, { text });
  }

  triggerEasterEgg(eggId: string): Promise<{ outcome: "granted" | "already_found" }> {
    return this.request("POST", `/easter-eggs/${eggId}/trigger`);
  }

  health(): Promise<{ ok: boolean }> {
    return this.request("GET", "/health");
  }

  // EventSource cannot send headers, so the stream URL carries the token.
  eventStreamUrl(sessionId: string): string {
    const token = this.token ?? "";
    return `${this.base}/sessions/${sessionId}/events?token=${encodeURIComponent(token)}`;
  }
}

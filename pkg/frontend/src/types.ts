// Wire types of the service API consumed by the player.

export interface AuthResult {
  user_id: string;
  token: string;
  expires_at_ms: number;
}

export interface AdventureCard {
  id: string;
  name: string;
  short_description: string;
  award: { id: string; name: string };
  image: string;
  distance_km: number;
  bus_lines: string[];
  available: boolean;
  alert: boolean;
  stage_count: number;
}

export interface CatalogResponse {
  languages: string[];
  adventures: AdventureCard[];
}

export interface QuizQuestionView {
  text: string;
  choices: string[];
  points: number;
  answered?: boolean;
  chosen_index?: number;
  correct?: boolean;
  correct_index?: number;
}

export interface StageView {
  kind: "info" | "beacon_gate" | "quiz" | "numbered_steps";
  text?: string | null;
  images?: string[];
  uuid?: string;
  major?: number;
  minor?: number;
  min_rssi?: number;
  unlocked?: boolean;
  questions?: QuizQuestionView[];
  steps?: string[];
}

export interface SessionDoc {
  session_id: string;
  user_id: string;
  adventure_id: string;
  stage_index: number;
  score: number;
  status: "active" | "complete";
  stage?: StageView | null;
  stage_count?: number;
}

export interface StartSessionResponse {
  outcome: "new" | "resume_prompt" | "completed_prompt";
  session: SessionDoc | null;
}

export interface AnswerResponse {
  correct: boolean;
  correct_index: number | null;
  score_delta: number;
  new_score: number;
}

export interface ScanEventWire {
  t_ms: number;
  uuid: string;
  major: number;
  minor: number;
  rssi: number;
}

export interface BadgeInfo {
  id: string;
  kind: string;
  name: string;
  granted_at_ms?: number;
  hint?: string;
}

export interface ProgressResponse {
  user_id: string;
  percentage: number;
  total_points: number;
  level: number;
  completed_adventures: string[];
  badges: BadgeInfo[];
  badge_hints: BadgeInfo[];
}

export interface LeaderboardEntry {
  user_id: string;
  total_points: number;
  last_award_at_ms: number | null;
}

export interface StreamMessage {
  type: "gate_status" | "stage_changed" | "score_changed" | "badge_granted" | "session_completed";
  session_id: string;
  [key: string]: unknown;
}

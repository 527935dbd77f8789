// Single-page player: wires the flow machine, API client and the live
// session event stream to the DOM. All strings shown during play come from
// the localized catalog; chrome labels live in the tiny dictionary below.

import { ApiClient, ApiError } from "./api.js";
import { FlowEvent, FlowState, initialState, reduce } from "./flow.js";
import { RideGenerator, mulberry32 } from "./ride.js";
import {
  applyAnswer,
  filledCircleCount,
  gateViewModel,
  QuestionViewModel,
  questionViewModel,
  quizComplete,
  stageTitle,
} from "./stage.js";
import type { AdventureCard, SessionDoc, StreamMessage } from "./types.js";

const CHROME: Record<string, Record<string, string>> = {
  en: { greeting: "Welcome back", adventures: "Adventures", awards: "Awards", board: "Leaderboard", feedback: "Feedback", about: "About the project", continue: "Continue", start: "Start adventure", resume: "Resume", restart: "Restart", replay: "Play again", back: "Back", send: "Send", waiting: "Waiting for the bus beacon...", ride: "Simulated bus ride", stop: "Stop ride", score: "Score", done: "Adventure complete!" },
  pt: { greeting: "Bem-vindo de volta", adventures: "Aventuras", awards: "Premios", board: "Classificacao", feedback: "Opiniao", about: "Sobre o projeto", continue: "Continuar", start: "Comecar aventura", resume: "Retomar", restart: "Recomecar", replay: "Jogar de novo", back: "Voltar", send: "Enviar", waiting: "A aguardar o beacon do autocarro...", ride: "Viagem simulada", stop: "Parar viagem", score: "Pontuacao", done: "Aventura concluida!" },
  de: { greeting: "Willkommen zurueck", adventures: "Abenteuer", awards: "Auszeichnungen", board: "Bestenliste", feedback: "Feedback", about: "Ueber das Projekt", continue: "Weiter", start: "Abenteuer starten", resume: "Fortsetzen", restart: "Neu starten", replay: "Nochmal spielen", back: "Zurueck", send: "Senden", waiting: "Warte auf das Bus-Signal...", ride: "Simulierte Busfahrt", stop: "Fahrt stoppen", score: "Punkte", done: "Abenteuer abgeschlossen!" },
  fr: { greeting: "Bon retour", adventures: "Aventures", awards: "Recompenses", board: "Classement", feedback: "Avis", about: "A propos du projet", continue: "Continuer", start: "Commencer l'aventure", resume: "Reprendre", restart: "Recommencer", replay: "Rejouer", back: "Retour", send: "Envoyer", waiting: "En attente du signal du bus...", ride: "Trajet simule", stop: "Arreter le trajet", score: "Score", done: "Aventure terminee !" },
};

function t(state: FlowState, key: string): string {
  return CHROME[state.language ?? "en"]?.[key] ?? CHROME.en[key] ?? key;
}

// --- tiny DOM helpers ----------------------------------------------------

type Child = Node | string | null | undefined;

function el(tag: string, attrs: Record<string, unknown> = {}, ...children: Child[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value == null) continue;
    if (key === "class") node.className = String(value);
    else if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2), value as EventListener);
    } else node.setAttribute(key, String(value));
  }
  for (const child of children) {
    if (child == null) continue;
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

// --- application state -----------------------------------------------------

const api = new ApiClient("");
let state: FlowState = initialState();
let cards: AdventureCard[] = [];
let sessionView: SessionDoc | null = null;
let questionViews: QuestionViewModel[] = [];
let stream: EventSource | null = null;
let ride: { generator: RideGenerator; timer: number; clockMs: number } | null = null;
let startPrompt: "resume_prompt" | "completed_prompt" | null = null;
let lastCompletedScore = 0;

function dispatch(event: FlowEvent): void {
  state = reduce(state, event);
  render().catch(showError);
}

function persist(): void {
  if (state.language) localStorage.setItem("marge.language", state.language);
  if (state.token) localStorage.setItem("marge.token", state.token);
  if (state.userId) localStorage.setItem("marge.userId", state.userId);
}

function showError(err: unknown): void {
  const banner = document.getElementById("banner")!;
  banner.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : "Service unreachable - retrying may help.";
  banner.classList.remove("hidden");
  window.setTimeout(() => banner.classList.add("hidden"), 5000);
}

function toast(text: string): void {
  const box = document.getElementById("toasts")!;
  const item = el("div", { class: "toast" }, text);
  box.append(item);
  window.setTimeout(() => item.remove(), 4000);
}

// --- live session stream -----------------------------------------------------

function openStream(sessionId: string): void {
  closeStream();
  stream = new EventSource(api.eventStreamUrl(sessionId));
  stream.onmessage = (raw) => {
    const message = JSON.parse(raw.data) as StreamMessage;
    handleStreamMessage(message).catch(showError);
  };
}

function closeStream(): void {
  stream?.close();
  stream = null;
}

async function handleStreamMessage(message: StreamMessage): Promise<void> {
  if (message.type === "gate_status") {
    await refreshSession();
    renderNow();
  } else if (message.type === "score_changed") {
    const points = document.getElementById("total-points");
    if (points) points.textContent = String(message.total_points);
  } else if (message.type === "badge_granted") {
    toast(`New badge: ${String(message.badge_id)}`);
  } else if (message.type === "session_completed") {
    lastCompletedScore = Number(message.score ?? 0);
    stopRide();
    closeStream();
    dispatch({ kind: "session_completed" });
  }
}

// --- simulated bus ride --------------------------------------------------------

function startRide(): void {
  if (!sessionView?.stage || sessionView.stage.kind !== "beacon_gate" || ride) return;
  const beacon = {
    uuid: sessionView.stage.uuid!,
    major: sessionView.stage.major!,
    minor: sessionView.stage.minor!,
  };
  const generator = new RideGenerator(mulberry32(Date.now() >>> 0), beacon, 8.33);
  const holder = { generator, timer: 0, clockMs: 0 };
  holder.timer = window.setInterval(() => {
    const from = holder.clockMs;
    holder.clockMs += 1000;
    const events = generator.batch(from, holder.clockMs);
    if (events.length && state.sessionId) {
      api.scanEvents(state.sessionId, events).catch(showError);
    }
  }, 1000);
  ride = holder;
  renderNow();
}

function stopRide(): void {
  if (ride) {
    window.clearInterval(ride.timer);
    ride = null;
  }
}

async function refreshSession(): Promise<void> {
  if (!state.sessionId) return;
  sessionView = await api.session(state.sessionId, state.language ?? "en");
  questionViews = (sessionView.stage?.questions ?? []).map(questionViewModel);
}

// --- screens ---------------------------------------------------------------

function renderSplash(root: HTMLElement): void {
  root.append(
    el("div", { class: "splash card" },
      el("div", { class: "logo", ondblclick: () => { api.triggerEasterEgg("logo-long-press").then((r) => { if (r.outcome === "granted") toast("You found a hidden badge!"); }).catch(() => undefined); } }, "MARGe"),
      el("p", {}, "Gamified bus adventures"),
      el("button", { class: "primary full", onclick: () => dispatch({ kind: "splash_done" }) }, "▶"),
    ),
  );
}

async function renderLanguage(root: HTMLElement): Promise<void> {
  const catalog = await api.catalog("en").catch(() => ({ languages: ["en", "pt", "de", "fr"], adventures: [] }));
  root.append(
    el("div", { class: "card" },
      el("h2", {}, "Choose a language / Escolha o idioma"),
      el("div", { class: "grid-2" },
        ...catalog.languages.map((lang) =>
          el("button", { class: "primary", onclick: () => { state = reduce(state, { kind: "language_chosen", language: lang }); persist(); renderNow(); } }, lang.toUpperCase()),
        ),
      ),
    ),
  );
}

function renderAuth(root: HTMLElement): void {
  const login = el("input", { placeholder: "login id", value: "" }) as HTMLInputElement;
  const secret = el("input", { placeholder: "password", type: "password" }) as HTMLInputElement;
  const submit = async (register: boolean) => {
    const result = register
      ? await api.register(login.value, secret.value)
      : await api.login(login.value, secret.value);
    state = reduce(state, { kind: "authed", token: result.token, userId: result.user_id });
    persist();
    if (state.language) api.setLanguage(result.user_id, state.language).catch(() => undefined);
    renderNow();
  };
  root.append(
    el("div", { class: "card" },
      el("h2", {}, "Sign in"),
      login, secret,
      el("div", { class: "grid-2" },
        el("button", { class: "primary", onclick: () => submit(false).catch(showError) }, "Login"),
        el("button", { onclick: () => submit(true).catch(showError) }, "Register"),
      ),
      el("button", { class: "linkish", onclick: () => toast("Password recovery is not available in this deployment.") }, "Forgot password?"),
    ),
  );
}

function renderMain(root: HTMLElement): void {
  root.append(
    el("div", { class: "card" },
      el("h2", {}, `${t(state, "greeting")}!`),
      el("div", { class: "grid-2" },
        el("button", { class: "tile", onclick: () => dispatch({ kind: "nav", to: "selector" }) }, t(state, "adventures")),
        el("button", { class: "tile", onclick: () => dispatch({ kind: "nav", to: "awards" }) }, t(state, "awards")),
        el("button", { class: "tile", onclick: () => dispatch({ kind: "nav", to: "leaderboard" }) }, t(state, "board")),
        el("button", { class: "tile", onclick: () => dispatch({ kind: "nav", to: "feedback" }) }, t(state, "feedback")),
      ),
    ),
  );
}

async function renderSelector(root: HTMLElement): Promise<void> {
  const catalog = await api.catalog(state.language ?? "en");
  cards = catalog.adventures;
  root.append(
    el("div", {},
      el("h2", {}, t(state, "adventures")),
      ...cards.map((card) =>
        el("div", { class: `card adventure ${card.alert ? "disabled" : ""}`, onclick: () => { if (card.available) dispatch({ kind: "adventure_selected", adventureId: card.id }); } },
          el("div", { class: "thumb" }, card.image ? "" : card.name[0]),
          el("div", {},
            el("h3", {}, card.name),
            el("p", {}, card.short_description),
            el("p", { class: "meta" }, `\u{1F3C5} ${card.award.name} · ${card.distance_km} km · ${card.bus_lines.join(", ")}`),
            card.alert ? el("p", { class: "alert" }, "Temporarily unavailable") : null,
          ),
        ),
      ),
    ),
  );
}

async function renderDetail(root: HTMLElement): Promise<void> {
  const card = cards.find((c) => c.id === state.adventureId);
  if (!card) return dispatch({ kind: "nav", to: "selector" });
  const start = async (confirmReplay: boolean) => {
    const result = await api.startSession(card.id, confirmReplay);
    if (result.outcome === "new") {
      startPrompt = null;
      state = reduce(state, { kind: "adventure_started", sessionId: result.session!.session_id });
      await refreshSession();
      openStream(result.session!.session_id);
      renderNow();
    } else {
      startPrompt = result.outcome;
      if (result.outcome === "resume_prompt") state = { ...state, sessionId: result.session!.session_id };
      renderNow();
    }
  };
  const resumeChoice = async (choice: "resume" | "restart") => {
    await api.resume(state.sessionId!, choice);
    startPrompt = null;
    state = reduce(state, { kind: "adventure_started", sessionId: state.sessionId! });
    await refreshSession();
    openStream(state.sessionId!);
    renderNow();
  };
  root.append(
    el("div", { class: "card" },
      el("h2", {}, card.name),
      el("p", {}, card.short_description),
      el("p", { class: "meta" }, `${card.distance_km} km · bus ${card.bus_lines.join(", ")} · ${card.stage_count} stages`),
      startPrompt === "resume_prompt"
        ? el("div", { class: "prompt" },
            el("p", {}, "You already have this adventure underway."),
            el("button", { class: "primary", onclick: () => resumeChoice("resume").catch(showError) }, t(state, "resume")),
            el("button", { onclick: () => resumeChoice("restart").catch(showError) }, t(state, "restart")))
        : startPrompt === "completed_prompt"
          ? el("div", { class: "prompt" },
              el("p", {}, "Already completed - try another adventure, or replay it."),
              el("button", { onclick: () => start(true).catch(showError) }, t(state, "replay")))
          : el("button", { class: "primary full", onclick: () => start(false).catch(showError) }, t(state, "start")),
      el("button", { class: "linkish", onclick: () => { startPrompt = null; dispatch({ kind: "nav", to: "selector" }); } }, t(state, "back")),
    ),
  );
}

function renderStage(root: HTMLElement): void {
  const stage = sessionView?.stage;
  if (!sessionView || !stage) return;
  const sid = sessionView.session_id;
  const header = el("div", { class: "stagehead" },
    el("h2", {}, stageTitle(stage)),
    el("span", { class: "meta" }, `${sessionView.stage_index + 1}/${sessionView.stage_count} · ${t(state, "score")} ${sessionView.score}`),
  );
  const advance = async (input: "ack" | "gate" | "quiz") => {
    await api.advance(sid, input);
    await refreshSession();
    if (sessionView && sessionView.status === "active") renderNow();
  };

  if (stage.kind === "info") {
    root.append(el("div", { class: "card" }, header,
      el("p", {}, stage.text ?? ""),
      el("div", { class: "imagerow" }, ...(stage.images ?? []).map((img) => el("div", { class: "thumb wide", title: img }))),
      el("button", { class: "primary full", onclick: () => advance("ack").catch(showError) }, t(state, "continue"))));
  } else if (stage.kind === "beacon_gate") {
    const gate = gateViewModel(stage.unlocked === true);
    root.append(el("div", { class: "card" }, header,
      el("p", {}, stage.text ?? ""),
      gate.overlayVisible
        ? el("div", { class: "overlay" }, el("div", { class: "spinner" }), el("p", {}, t(state, "waiting")))
        : el("button", { class: "primary full", onclick: () => advance("gate").catch(showError) }, t(state, "continue")),
      el("div", { class: "ridepanel" },
        el("h3", {}, t(state, "ride")),
        ride
          ? el("button", { onclick: () => { stopRide(); renderNow(); } }, t(state, "stop"))
          : el("button", { class: "primary", onclick: () => startRide() }, "▶ " + t(state, "ride")))));
  } else if (stage.kind === "quiz") {
    const list = el("div", {});
    questionViews.forEach((view, qi) => {
      const buttons = view.choices.map((choice, ci) =>
        el("button", {
          class: `choice ${view.chosenIndex === ci ? (view.wasCorrect ? "right" : "wrong") : ""} ${view.revealedCorrectIndex === ci ? "revealed" : ""}`,
          disabled: view.buttonsDisabled ? "disabled" : null,
          onclick: async () => {
            const result = await api.answer(sid, qi, ci);
            questionViews[qi] = applyAnswer(view, ci, result);
            if (sessionView) sessionView.score = result.new_score;
            renderNow();
          },
        }, choice),
      );
      list.append(el("div", { class: "question" }, el("p", {}, `${qi + 1}. ${view.text}`), ...buttons));
    });
    root.append(el("div", { class: "card" }, header, list,
      quizComplete(questionViews)
        ? el("button", { class: "primary full", onclick: () => advance("quiz").catch(showError) }, t(state, "continue"))
        : null));
  } else {
    const offsets = (stage.steps ?? []).map((_, i) => i * 72);
    const circles = el("div", { class: "circles" });
    const column = el("div", { class: "steps" },
      ...(stage.steps ?? []).map((step, i) => el("div", { class: "step" }, `${i + 1}. ${step}`)));
    const repaint = () => {
      const filled = filledCircleCount(column.scrollTop, offsets, 36);
      circles.replaceChildren(
        ...(stage.steps ?? []).map((_, i) => el("div", { class: `circle ${i < filled ? "filled" : ""}` }, String(i + 1))));
    };
    column.addEventListener("scroll", repaint);
    root.append(el("div", { class: "card" }, header,
      el("div", { class: "stepsrow" }, circles, column),
      el("button", { class: "primary full", onclick: () => advance("ack").catch(showError) }, t(state, "continue"))));
    repaint();
  }
}

async function renderQuizResult(root: HTMLElement): Promise<void> {
  root.append(
    el("div", { class: "card center" },
      el("h2", {}, t(state, "done")),
      el("p", { class: "bigscore" }, `${t(state, "score")}: ${lastCompletedScore}`),
      el("button", { class: "primary", onclick: () => dispatch({ kind: "nav", to: "awards" }) }, t(state, "awards")),
      el("button", { onclick: () => dispatch({ kind: "nav", to: "selector" }) }, t(state, "adventures")),
    ),
  );
}

async function renderAwards(root: HTMLElement): Promise<void> {
  const progress = await api.progress(state.userId!, state.language ?? "en");
  root.append(
    el("div", { class: "card" },
      el("h2", {}, t(state, "awards")),
      el("p", { class: "bigscore" },
        `${progress.percentage}% · `,
        el("span", { id: "total-points" }, String(progress.total_points)),
        ` pts · level ${progress.level}`),
      el("h3", {}, "Earned"),
      ...(progress.badges.length
        ? progress.badges.map((b) => el("p", { class: "badge" }, `\u{1F3C5} ${b.name}`))
        : [el("p", { class: "meta" }, "Nothing yet - finish an adventure!")]),
      el("h3", {}, "Still to find"),
      ...progress.badge_hints.map((b) => el("p", { class: "hinted" }, `\u{1F512} ${b.name} - ${b.hint ?? ""}`)),
    ),
  );
}

let boardTimer: number | null = null;

async function renderLeaderboard(root: HTMLElement): Promise<void> {
  const body = el("tbody", {});
  const paint = async () => {
    const board = await api.leaderboard(10);
    body.replaceChildren(
      ...board.entries.map((entry, i) =>
        el("tr", { class: entry.user_id === state.userId ? "me" : "" },
          el("td", {}, String(i + 1)), el("td", {}, entry.user_id), el("td", {}, String(entry.total_points)))),
    );
  };
  await paint();
  // refresh while the board is on screen so rows move without a reload
  if (boardTimer) window.clearInterval(boardTimer);
  boardTimer = window.setInterval(() => {
    if (state.route !== "leaderboard") {
      if (boardTimer) window.clearInterval(boardTimer);
      boardTimer = null;
      return;
    }
    paint().catch(() => undefined);
  }, 4000);
  root.append(
    el("div", { class: "card" },
      el("h2", {}, t(state, "board")),
      el("table", {},
        el("thead", {}, el("tr", {}, el("th", {}, "#"), el("th", {}, "rider"), el("th", {}, "pts"))),
        body),
    ),
  );
}

function renderFeedback(root: HTMLElement): void {
  const box = el("textarea", { rows: "5", placeholder: "Tell us what you think..." }) as HTMLTextAreaElement;
  root.append(
    el("div", { class: "card" },
      el("h2", {}, t(state, "feedback")),
      box,
      el("button", { class: "primary", onclick: () => api.feedback(state.userId!, box.value).then(() => { box.value = ""; toast("Thanks!"); }).catch(showError) }, t(state, "send")),
    ),
  );
}

function renderInstitutional(root: HTMLElement): void {
  root.append(
    el("div", { class: "card" },
      el("h2", {}, t(state, "about")),
      el("p", {}, "A gamified companion for the local bus network: ride, explore, answer quizzes and collect badges while moving sustainably."),
    ),
  );
}

// --- shell ------------------------------------------------------------------

function renderChrome(root: HTMLElement): void {
  if (!["main", "selector", "detail", "awards", "leaderboard", "feedback", "institutional"].includes(state.route)) return;
  const menu = el("div", { class: "sidemenu hidden", id: "sidemenu" },
    el("button", { onclick: () => dispatch({ kind: "nav", to: "feedback" }) }, t(state, "feedback")),
    el("button", { onclick: () => dispatch({ kind: "nav", to: "institutional" }) }, t(state, "about")),
    el("button", { onclick: () => { localStorage.removeItem("marge.token"); localStorage.removeItem("marge.userId"); closeStream(); dispatch({ kind: "logout" }); } }, "Logout"),
  );
  root.append(
    el("header", {},
      el("button", { class: "burger", onclick: () => menu.classList.toggle("hidden") }, "☰"),
      el("span", { class: "brand", onclick: () => dispatch({ kind: "nav", to: "main" }) }, "MARGe"),
    ),
    menu,
  );
}

async function render(): Promise<void> {
  renderNowInner();
  // async screens fill themselves in after data arrives
  const root = document.getElementById("screen")!;
  try {
    if (state.route === "language") await renderLanguage(root);
    else if (state.route === "selector") await renderSelector(root);
    else if (state.route === "detail") await renderDetail(root);
    else if (state.route === "quiz_result") await renderQuizResult(root);
    else if (state.route === "awards") await renderAwards(root);
    else if (state.route === "leaderboard") await renderLeaderboard(root);
  } catch (err) {
    showError(err);
  }
}

function renderNowInner(): void {
  const app = document.getElementById("app")!;
  app.replaceChildren();
  renderChrome(app);
  const root = el("main", { id: "screen" });
  app.append(root);
  if (state.route === "splash") renderSplash(root);
  else if (state.route === "auth") renderAuth(root);
  else if (state.route === "main") renderMain(root);
  else if (state.route === "stage") renderStage(root);
  else if (state.route === "feedback") renderFeedback(root);
  else if (state.route === "institutional") renderInstitutional(root);
}

function renderNow(): void {
  render().catch(showError);
}

export function boot(): void {
  const storedToken = localStorage.getItem("marge.token");
  const storedUser = localStorage.getItem("marge.userId");
  api.token = storedToken;
  api.userId = storedUser;
  dispatch({
    kind: "boot",
    storedLanguage: localStorage.getItem("marge.language"),
    storedToken,
    storedUserId: storedUser,
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}

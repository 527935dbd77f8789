// Pure view-model logic for the four stage screens.

import type { QuizQuestionView, StageView } from "./types.js";

// Beacon gate: a grey busy overlay until the beacon is in range, then a
// full-width continue button.
export interface GateViewModel {
  overlayVisible: boolean;
  continueEnabled: boolean;
}

export function gateViewModel(unlocked: boolean): GateViewModel {
  return { overlayVisible: !unlocked, continueEnabled: unlocked };
}

// Quiz: one submission per question; a wrong choice reveals the right one.
export interface QuestionViewModel {
  text: string;
  choices: string[];
  chosenIndex: number | null;
  revealedCorrectIndex: number | null;
  wasCorrect: boolean | null;
  buttonsDisabled: boolean;
}

export function questionViewModel(question: QuizQuestionView): QuestionViewModel {
  const answered = question.answered === true;
  return {
    text: question.text,
    choices: question.choices,
    chosenIndex: answered ? (question.chosen_index ?? null) : null,
    revealedCorrectIndex: answered && question.correct === false ? (question.correct_index ?? null) : null,
    wasCorrect: answered ? (question.correct ?? null) : null,
    buttonsDisabled: answered,
  };
}

export function applyAnswer(
  view: QuestionViewModel,
  chosenIndex: number,
  result: { correct: boolean; correct_index: number | null },
): QuestionViewModel {
  return {
    ...view,
    chosenIndex,
    wasCorrect: result.correct,
    revealedCorrectIndex: result.correct ? null : result.correct_index,
    buttonsDisabled: true,
  };
}

export function quizComplete(views: QuestionViewModel[]): boolean {
  return views.length > 0 && views.every((v) => v.buttonsDisabled);
}

// Numbered steps: scrolling the text column fills the circles of every step
// whose top has scrolled past the anchor line.
export function filledCircleCount(scrollTop: number, stepOffsets: number[], anchor = 0): number {
  let filled = 0;
  for (const offset of stepOffsets) {
    if (offset <= scrollTop + anchor) filled += 1;
  }
  return Math.max(filled, stepOffsets.length > 0 ? 1 : 0);
}

export function stageTitle(stage: StageView): string {
  switch (stage.kind) {
    case "info":
      return "About this adventure";
    case "beacon_gate":
      return "Board the bus";
    case "quiz":
      return "Quiz";
    case "numbered_steps":
      return "Find the spot";
  }
}

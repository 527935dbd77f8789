import { describe, expect, it } from "vitest";

import {
  applyAnswer,
  filledCircleCount,
  gateViewModel,
  questionViewModel,
  quizComplete,
} from "../src/stage.js";
import type { QuizQuestionView } from "../src/types.js";

describe("beacon gate view", () => {
  it("shows the busy overlay while locked", () => {
    const locked = gateViewModel(false);
    expect(locked.overlayVisible).toBe(true);
    expect(locked.continueEnabled).toBe(false);
  });

  it("swaps the overlay for a continue button once unlocked", () => {
    const unlocked = gateViewModel(true);
    expect(unlocked.overlayVisible).toBe(false);
    expect(unlocked.continueEnabled).toBe(true);
  });
});

describe("quiz view", () => {
  const wire: QuizQuestionView = {
    text: "Which day is busiest?",
    choices: ["Monday", "Friday"],
    points: 10,
  };

  it("starts enabled with nothing revealed", () => {
    const view = questionViewModel(wire);
    expect(view.buttonsDisabled).toBe(false);
    expect(view.revealedCorrectIndex).toBeNull();
  });

  it("disables buttons after any answer (no double submission)", () => {
    const right = applyAnswer(questionViewModel(wire), 1, { correct: true, correct_index: null });
    expect(right.buttonsDisabled).toBe(true);
    const wrong = applyAnswer(questionViewModel(wire), 0, { correct: false, correct_index: 1 });
    expect(wrong.buttonsDisabled).toBe(true);
  });

  it("reveals the correct option only on a wrong answer", () => {
    const wrong = applyAnswer(questionViewModel(wire), 0, { correct: false, correct_index: 1 });
    expect(wrong.revealedCorrectIndex).toBe(1);
    expect(wrong.wasCorrect).toBe(false);
    const right = applyAnswer(questionViewModel(wire), 1, { correct: true, correct_index: null });
    expect(right.revealedCorrectIndex).toBeNull();
  });

  it("restores answered state from the server view", () => {
    const answered = questionViewModel({
      ...wire,
      answered: true,
      chosen_index: 0,
      correct: false,
      correct_index: 1,
    });
    expect(answered.buttonsDisabled).toBe(true);
    expect(answered.revealedCorrectIndex).toBe(1);
  });

  it("signals completion only when every question is answered", () => {
    const a = questionViewModel(wire);
    const b = questionViewModel(wire);
    expect(quizComplete([a, b])).toBe(false);
    const done = applyAnswer(a, 1, { correct: true, correct_index: null });
    expect(quizComplete([done, b])).toBe(false);
    const done2 = applyAnswer(b, 0, { correct: false, correct_index: 1 });
    expect(quizComplete([done, done2])).toBe(true);
    expect(quizComplete([])).toBe(false);
  });
});

describe("numbered steps circles", () => {
  const offsets = [0, 72, 144, 216];

  it("fills the first circle before any scrolling", () => {
    expect(filledCircleCount(0, offsets, 36)).toBe(1);
  });

  it("fills circles 1..k when scrolled to item k", () => {
    expect(filledCircleCount(72, offsets, 36)).toBe(2);
    expect(filledCircleCount(150, offsets, 36)).toBe(3);
    expect(filledCircleCount(400, offsets, 36)).toBe(4);
  });

  it("never exceeds the number of steps", () => {
    expect(filledCircleCount(10_000, offsets, 36)).toBe(4);
    expect(filledCircleCount(10_000, [], 36)).toBe(0);
  });

  it("is monotone in scroll position", () => {
    let last = 0;
    for (let scroll = 0; scroll <= 400; scroll += 10) {
      const filled = filledCircleCount(scroll, offsets, 36);
      expect(filled).toBeGreaterThanOrEqual(last);
      last = filled;
    }
  });
});

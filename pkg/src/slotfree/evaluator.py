"""Decoding pair probabilities into dialogue-state predictions and scoring
them with exact-match metrics.

Two numbers summarize a run: joint goal accuracy (the accumulated goal state
matches the accumulated gold state exactly, checked at every turn) and turn
request accuracy (the predicted request set matches the gold request set
exactly, checked at every turn). Every turn counts in the denominators —
including turns asserting nothing.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import REQUEST_SLOT, SlotValue, accumulate_joint_goals
from .scorer import score_turn


@dataclass(frozen=True)
class PredictionSet:
    """What one turn asserts: new goal pairs and requested pairs."""
    goals: frozenset
    requests: frozenset


def decode_predictions(probs: dict, ontology, threshold: float = 0.5) -> PredictionSet:
    """Threshold pair probabilities into a per-turn prediction. Each goal
    slot asserts at most its highest-probability value, and only when that
    probability strictly exceeds the threshold (ties keep the value listed
    first in the ontology). Requests are decoded independently."""
    goals = []
    for slot in ontology.slots:
        if slot == REQUEST_SLOT:
            continue
        best, best_p = None, threshold
        for value in ontology.values[slot]:
            p = probs[SlotValue(slot, value)]
            if p > best_p:
                best, best_p = value, p
        if best is not None:
            goals.append(SlotValue(slot, best))
    requests = [SlotValue(REQUEST_SLOT, value)
                for value in ontology.values.get(REQUEST_SLOT, ())
                if probs[SlotValue(REQUEST_SLOT, value)] > threshold]
    return PredictionSet(goals=frozenset(goals), requests=frozenset(requests))


def _score_dialogue(prob_fn, dialogue, ontology, threshold):
    preds = [decode_predictions(prob_fn(t), ontology, threshold)
             for t in dialogue.turns]
    pred_joint = accumulate_joint_goals([sorted(p.goals, key=lambda s: s.slot)
                                         for p in preds])
    gold_joint = accumulate_joint_goals([t.gold_turn_goals
                                         for t in dialogue.turns])
    joint_hits = request_hits = 0
    for i, turn in enumerate(dialogue.turns):
        if pred_joint[i] == gold_joint[i]:
            joint_hits += 1
        if preds[i].requests == frozenset(turn.gold_turn_requests):
            request_hits += 1
    return joint_hits, request_hits, len(dialogue.turns)


def evaluate_probabilities(prob_fn, dialogues, ontology, *,
                           threshold: float = 0.5, threads: int = 1) -> dict:
    """Score any per-turn probability source. `prob_fn(turn)` must return
    {pair: float} covering every ontology pair."""
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    def work(d):
        return _score_dialogue(prob_fn, d, ontology, threshold)

    if threads == 1:
        results = [work(d) for d in dialogues]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, dialogues))

    joint = sum(r[0] for r in results)
    requests = sum(r[1] for r in results)
    turns = sum(r[2] for r in results)
    return {
        "joint_goal": joint / turns if turns else 0.0,
        "turn_request": requests / turns if turns else 0.0,
        "n_turns": turns,
    }


def evaluate_model(model, dialogues, ontology, *, mode: str = "transcript",
                   threshold: float = 0.5, threads: int = 1) -> dict:
    """Run the tracker over dialogues and score it. Pair-text encodings are
    cached across turns: evaluation applies no dropout and touches no
    parameters, so the cache is exact."""
    cache = {}

    def prob_fn(turn):
        scored = score_turn(model, turn, ontology, mode=mode,
                            ontology_cache=cache)
        return {pair: p.item() for pair, p in scored.items()}

    return evaluate_probabilities(prob_fn, dialogues, ontology,
                                  threshold=threshold, threads=threads)

"""Reward shaping and group-relative advantages for feasibility completions."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from affordcheck.scene import PropertyKind

FORMAT_REWARD = 0.5
PLACEHOLDER_PENALTY = -1.0
CORRECT_FALSE_REWARD = 3.0
CORRECT_TRUE_REWARD = 2.0
SPATIAL_REWARD = 1.0
PLACEHOLDER_TEXT = "reasoning process here"

SPATIAL_KEYWORDS = {
    PropertyKind.NAVIGABLE: ("path", "walk", "navigate", "access", "blocked", "way", "stuck"),
    PropertyKind.REACHABLE: ("reach", "distance", "too far", "height", "arm", "long", "short", "touch"),
    PropertyKind.INTERACTABLE: ("handle", "grip", "part", "grasp", "rim", "side"),
    PropertyKind.CLEARANCE: ("clearance", "blocked", "fit", "narrow", "collision", "hit", "space", "swing"),
}

_THINK = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)


@dataclass(frozen=True)
class ParsedCompletion:
    think: str
    answer: bool | None
    format_ok: bool
    placeholder: bool


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: float
    r_correct: float
    r_spatial: float
    total: float
    parsed_answer: bool | None = None
    matched_keywords: tuple[str, ...] = field(default_factory=tuple)


def parse_completion(text: str) -> ParsedCompletion:
    think = _THINK.search(text)
    answer = _ANSWER.search(text)
    value = None
    if answer:
        word = answer.group(1).strip().lower()
        value = {"true": True, "false": False}.get(word)
    body = think.group(1) if think else ""
    return ParsedCompletion(
        think=body,
        answer=value,
        format_ok=bool(think and answer and value is not None),
        placeholder=bool(think) and body.strip() == PLACEHOLDER_TEXT,
    )


def matched_keywords(think: str, prop: PropertyKind | None) -> tuple[str, ...]:
    if prop is None:
        return ()
    text = think.lower()
    return tuple(k for k in SPATIAL_KEYWORDS.get(PropertyKind(prop), ()) if k in text)


def grpo_reward(completion: str, label: bool, failing_property: PropertyKind | None = None) -> RewardBreakdown:
    """Format + asymmetric correctness + keyword reward for one completion.

    Reproducing the prompt's placeholder reasoning short-circuits to the
    penalty alone.
    """
    parsed = parse_completion(completion)
    if parsed.placeholder:
        return RewardBreakdown(0.0, 0.0, 0.0, PLACEHOLDER_PENALTY, parsed.answer, ())
    r_format = FORMAT_REWARD if parsed.format_ok else 0.0
    r_correct = 0.0
    if parsed.answer is not None and parsed.answer == bool(label):
        r_correct = CORRECT_TRUE_REWARD if label else CORRECT_FALSE_REWARD
    hits: tuple[str, ...] = ()
    if not label and parsed.answer is False:
        hits = matched_keywords(parsed.think, failing_property)
    r_spatial = SPATIAL_REWARD if hits else 0.0
    return RewardBreakdown(r_format, r_correct, r_spatial, r_format + r_correct + r_spatial, parsed.answer, hits)


def group_advantage(rewards, epsilon: float = 1e-4) -> np.ndarray:
    """(r - mean) / (std + epsilon) with the population standard deviation."""
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        raise ValueError("empty reward group")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if np.all(r == r[0]):
        return np.zeros_like(r)
    centered = r - r.mean()
    centered -= centered.mean()  # second pass removes the rounding left in the mean
    return centered / (np.sqrt(np.mean(centered**2)) + epsilon)

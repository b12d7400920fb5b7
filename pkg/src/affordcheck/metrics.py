"""Feasibility-classification metrics over prediction/label records.

The positive class is "feasible". A false positive is an infeasible task
predicted feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from affordcheck.scene import PropertyKind

SHORT_HORIZON_MAX = 2


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class LabelRecord:
    task_id: str
    agent_name: str
    step_count: int
    task_label: bool
    action_labels: tuple[bool, ...]
    failing_properties: tuple[PropertyKind | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "action_labels", tuple(bool(x) for x in self.action_labels))
        if self.failing_properties is not None:
            object.__setattr__(
                self,
                "failing_properties",
                tuple(PropertyKind(p) if p is not None else None for p in self.failing_properties),
            )
        if self.step_count != len(self.action_labels):
            raise DataError(f"task {self.task_id}: step_count does not match action_labels")
        if bool(self.task_label) != all(self.action_labels):
            raise DataError(f"task {self.task_id}: task_label must equal AND of action_labels")


@dataclass(frozen=True)
class PredictionRecord:
    task_id: str
    mode: str
    task_pred: bool | None = None
    action_preds: tuple[bool, ...] | None = None

    def __post_init__(self):
        if self.mode == "direct":
            if self.task_pred is None:
                raise DataError(f"task {self.task_id}: direct prediction needs task_pred")
        elif self.mode == "decomposed":
            if not self.action_preds:
                raise DataError(f"task {self.task_id}: decomposed prediction needs action_preds")
            object.__setattr__(self, "action_preds", tuple(bool(x) for x in self.action_preds))
        else:
            raise DataError(f"task {self.task_id}: unknown mode {self.mode!r}")

    @property
    def conclusion(self) -> bool:
        if self.mode == "direct":
            return bool(self.task_pred)
        return decomposed_conclusion(self.action_preds)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_pairs(cls, pairs) -> ConfusionCounts:
        tp = tn = fp = fn = 0
        for label, pred in pairs:
            if pred and label:
                tp += 1
            elif pred:
                fp += 1
            elif label:
                fn += 1
            else:
                tn += 1
        return cls(tp, tn, fp, fn)

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation; 0.0 when any marginal is empty."""
    if min(c.tp, c.tn, c.fp, c.fn) < 0:
        raise ValueError("confusion counts must be non-negative")
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def decomposed_conclusion(action_preds) -> bool:
    preds = list(action_preds)
    if not preds:
        raise ValueError("decomposed conclusion needs at least one action prediction")
    return all(preds)


def _accuracy(pairs) -> float | None:
    pairs = list(pairs)
    if not pairs:
        return None
    return sum(1 for label, pred in pairs if bool(label) == bool(pred)) / len(pairs)


def _match(labels, preds) -> list[tuple[LabelRecord, PredictionRecord]]:
    by_id = {lab.task_id: lab for lab in labels}
    out = []
    for p in preds:
        if p.task_id not in by_id:
            raise DataError(f"prediction for unknown task {p.task_id!r}")
        out.append((by_id[p.task_id], p))
    return out


def horizon_stability(matched) -> float | None:
    short = _accuracy((lab.task_label, p.conclusion) for lab, p in matched if lab.step_count <= SHORT_HORIZON_MAX)
    long_ = _accuracy((lab.task_label, p.conclusion) for lab, p in matched if lab.step_count > SHORT_HORIZON_MAX)
    if short is None or long_ is None or short == 0:
        return None
    return 100.0 * long_ / short


def inclusivity_gap(matched) -> float | None:
    groups: dict[str, list] = {}
    for lab, p in matched:
        groups.setdefault(lab.agent_name, []).append((lab.task_label, p.conclusion))
    accs = [_accuracy(v) for v in groups.values()]
    if len(accs) < 2:
        return None
    return max(abs(a - b) for a, b in combinations(accs, 2))


def task_metrics(labels, preds) -> dict:
    """Accuracy, FP rate, MCC, HSI and InGap at task level.

    Decomposed predictions are first conjoined into task conclusions and
    additionally scored per action.
    """
    matched = _match(labels, preds)
    if not matched:
        raise DataError("no predictions to score")
    pairs = [(lab.task_label, p.conclusion) for lab, p in matched]
    counts = ConfusionCounts.from_pairs(pairs)
    negatives = counts.fp + counts.tn
    out = {
        "task_accuracy": _accuracy(pairs),
        "fp": counts.fp / negatives if negatives else None,
        "mcc": mcc(counts),
        "ingap": inclusivity_gap(matched),
        "hsi": horizon_stability(matched),
        "count": len(pairs),
    }
    if all(p.mode == "decomposed" for _, p in matched):
        action_pairs = []
        for lab, p in matched:
            if len(p.action_preds) != lab.step_count:
                raise DataError(f"task {lab.task_id}: action prediction count differs from label")
            action_pairs.extend(zip(lab.action_labels, p.action_preds))
        out["action_accuracy"] = _accuracy(action_pairs)
    return out


def consistency(direct_preds, decomposed_preds) -> float:
    """Percentage of tasks whose direct verdict equals the decomposed conclusion."""
    direct = {p.task_id: p.conclusion for p in direct_preds}
    decomposed = {p.task_id: p.conclusion for p in decomposed_preds}
    if set(direct) != set(decomposed):
        raise DataError("direct and decomposed predictions cover different tasks")
    if not direct:
        raise DataError("no tasks to compare")
    return 100.0 * sum(direct[t] == decomposed[t] for t in direct) / len(direct)

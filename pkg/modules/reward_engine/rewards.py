import math
from dataclasses import dataclass
from typing import List, Tuple

from errors import RewardError

MAX_JUDGE_SCORE = 5


@dataclass(frozen=True)
class MatchResult:
    n_pred: int
    n_gold: int
    n_correct: int
    pairs: Tuple[Tuple[int, int], ...] = ()

    @property
    def precision(self):
        return self.n_correct / max(1, self.n_pred)

    @property
    def recall(self):
        return self.n_correct / max(1, self.n_gold)

    def to_dict(self):
        return {
            'n_pred': self.n_pred,
            'n_gold': self.n_gold,
            'n_correct': self.n_correct,
            'pairs': [list(pair) for pair in self.pairs],
        }


@dataclass(frozen=True)
class RewardWeights:
    eta_tool: float = 0.5
    eta_dlg: float = 0.5

    def __post_init__(self):
        for name in ('eta_tool', 'eta_dlg'):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")

    @classmethod
    def from_config(cls, config):
        return cls(
            eta_tool=float(config.get('REWARD_ETA_TOOL', 0.5)),
            eta_dlg=float(config.get('REWARD_ETA_DLG', 0.5)),
        )

    def to_dict(self):
        return {'eta_tool': self.eta_tool, 'eta_dlg': self.eta_dlg}


def match_calls(pred, gold):
    """Maximum one-to-one matching of predicted to gold calls.

    Calls match only when canonically equal, and equality is transitive, so
    pairing each prediction with the first unused equal gold call is optimal.
    """
    pred = list(pred)
    gold = list(gold)
    unused = {}
    for j, call in enumerate(gold):
        unused.setdefault(call, []).append(j)
    pairs: List[Tuple[int, int]] = []
    for i, call in enumerate(pred):
        slots = unused.get(call)
        if slots:
            pairs.append((i, slots.pop(0)))
    return MatchResult(len(pred), len(gold), len(pairs), tuple(pairs))


def f1_from_match(match):
    if match.n_pred == 0 and match.n_gold == 0:
        return 1.0
    precision = match.precision
    recall = match.recall
    return 2 * precision * recall / max(1, precision + recall)


def tool_call_f1(pred, gold):
    """Tool-call F1 reward in [0, 1]; an empty prediction for an empty gold set scores 1."""
    return f1_from_match(match_calls(pred, gold))


def roleplay_reward(score):
    if isinstance(score, bool) or not isinstance(score, int):
        raise RewardError(f"judge score must be an integer, got {score!r}")
    if not 0 <= score <= MAX_JUDGE_SCORE:
        raise RewardError(f"judge score must be within 0..{MAX_JUDGE_SCORE}, got {score}")
    return score / MAX_JUDGE_SCORE


def combined_reward(r_tool, r_dlg, weights=None):
    weights = weights or RewardWeights()
    for name, value in (('r_tool', r_tool), ('r_dlg', r_dlg)):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise RewardError(f"{name} must be a finite number, got {value!r}")
    blended = weights.eta_tool * r_tool + weights.eta_dlg * r_dlg
    return min(1.0, max(0.0, blended))

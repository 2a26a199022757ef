"""Group-relative policy optimisation numerics.

Everything here is a pure function of per-sample numbers supplied by the
caller (rewards, log-probabilities, KL and entropy estimates); no policy or
gradient is involved. Arrays are float64.
"""
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from errors import GrpoInputError

KL_BETA_MIN = 1e-8
KL_BETA_MAX = 10.0


@dataclass(frozen=True)
class GrpoConfig:
    clip_eps: float = 0.2
    entropy_alpha: float = 0.01
    kl_beta_init: float = 1e-3
    kl_target: float = 0.1
    kl_coef: float = 0.001
    group_size: int = 5
    advantage_eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError(f"clip_eps must be in (0, 1), got {self.clip_eps}")
        if self.group_size < 2:
            raise ValueError(f"group_size must be at least 2, got {self.group_size}")
        for name in ('entropy_alpha', 'kl_beta_init', 'kl_coef', 'advantage_eps'):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.kl_target <= 0:
            raise ValueError("kl_target must be positive")

    @classmethod
    def from_config(cls, config):
        return cls(
            clip_eps=float(config.get('GRPO_CLIP_EPS', 0.2)),
            entropy_alpha=float(config.get('GRPO_ENTROPY_ALPHA', 0.01)),
            kl_beta_init=float(config.get('GRPO_KL_BETA_INIT', 1e-3)),
            kl_target=float(config.get('GRPO_KL_TARGET', 0.1)),
            kl_coef=float(config.get('GRPO_KL_COEF', 0.001)),
            group_size=int(config.get('GRPO_GROUP_SIZE', 5)),
            advantage_eps=float(config.get('GRPO_ADVANTAGE_EPS', 1e-8)),
        )

    def to_dict(self):
        return {
            'clip_eps': self.clip_eps,
            'entropy_alpha': self.entropy_alpha,
            'kl_beta_init': self.kl_beta_init,
            'kl_target': self.kl_target,
            'kl_coef': self.kl_coef,
            'group_size': self.group_size,
            'advantage_eps': self.advantage_eps,
        }


@dataclass(frozen=True)
class RolloutGroup:
    rewards: Tuple[float, ...]
    logp_new: Tuple[float, ...]
    logp_old: Tuple[float, ...]
    kl_estimates: Tuple[float, ...]
    entropy_estimates: Tuple[float, ...]

    def __post_init__(self):
        for name in ('rewards', 'logp_new', 'logp_old', 'kl_estimates', 'entropy_estimates'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    def __len__(self):
        return len(self.rewards)

    def validate(self, group_size=None):
        sizes = {len(self.rewards), len(self.logp_new), len(self.logp_old),
                 len(self.kl_estimates), len(self.entropy_estimates)}
        if len(sizes) != 1:
            raise GrpoInputError("all rollout fields must have the same length")
        if group_size is not None and len(self) != group_size:
            raise GrpoInputError(f"expected {group_size} rollouts, got {len(self)}")
        _as_finite_array(self.rewards, "rewards")
        if any(r < 0.0 or r > 1.0 for r in self.rewards):
            raise GrpoInputError("rewards must lie in [0, 1]")
        if any(k < 0.0 for k in _as_finite_array(self.kl_estimates, "kl_estimates")):
            raise GrpoInputError("kl_estimates must be non-negative")
        _as_finite_array(self.entropy_estimates, "entropy_estimates")

    @classmethod
    def from_dict(cls, data):
        return cls(
            rewards=data['rewards'],
            logp_new=data['logp_new'],
            logp_old=data['logp_old'],
            kl_estimates=data.get('kl_estimates') or [0.0] * len(data['rewards']),
            entropy_estimates=data.get('entropy_estimates') or [0.0] * len(data['rewards']),
        )


@dataclass(frozen=True)
class LossDiagnostics:
    surrogate: float
    kl_penalty: float
    entropy_bonus: float
    clip_fraction: float
    mean_ratio: float
    advantages: Tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self):
        return {
            'surrogate': self.surrogate,
            'kl_penalty': self.kl_penalty,
            'entropy_bonus': self.entropy_bonus,
            'clip_fraction': self.clip_fraction,
            'mean_ratio': self.mean_ratio,
            'advantages': list(self.advantages),
        }


def _as_finite_array(values, name):
    try:
        array = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise GrpoInputError(f"{name} must be numeric: {e}") from e
    if array.ndim != 1:
        raise GrpoInputError(f"{name} must be a flat sequence")
    if not np.all(np.isfinite(array)):
        raise GrpoInputError(f"{name} must be finite")
    return array


def group_advantages(rewards: Sequence[float], advantage_eps=1e-8):
    """Standardise rewards within their group: ``(r - mean) / (std + eps)``.

    The standard deviation is the population one. A group whose rewards are
    all equal gets exact zeros.
    """
    array = _as_finite_array(rewards, "rewards")
    if array.size == 0:
        raise GrpoInputError("rewards must be non-empty")
    if np.all(array == array[0]):
        return np.zeros_like(array)
    return (array - array.mean()) / (array.std() + advantage_eps)


def importance_ratios(logp_new: Sequence[float], logp_old: Sequence[float]):
    new = _as_finite_array(logp_new, "logp_new")
    old = _as_finite_array(logp_old, "logp_old")
    if new.shape != old.shape:
        raise GrpoInputError(f"length mismatch: {new.size} new vs {old.size} old log-probs")
    # a large finite gap saturates to inf
    with np.errstate(over="ignore"):
        return np.exp(new - old)


def grpo_loss(group: RolloutGroup, cfg: GrpoConfig, kl_beta: float):
    """Clipped GRPO objective with KL penalty and entropy bonus, as a loss to minimise.

    Returns ``(loss, LossDiagnostics)``.
    """
    group.validate(cfg.group_size)
    if not math.isfinite(kl_beta) or kl_beta < 0:
        raise GrpoInputError(f"kl_beta must be finite and non-negative, got {kl_beta}")

    advantages = group_advantages(group.rewards, cfg.advantage_eps)
    ratios = importance_ratios(group.logp_new, group.logp_old)
    clipped = np.clip(ratios, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)

    # zero-advantage samples contribute nothing, even at an infinite ratio
    with np.errstate(invalid="ignore"):
        terms = np.minimum(ratios * advantages, clipped * advantages)
    terms = np.where(advantages == 0.0, 0.0, terms)
    surrogate = -float(np.mean(terms))
    kl_penalty = kl_beta * float(np.mean(np.asarray(group.kl_estimates)))
    entropy_bonus = cfg.entropy_alpha * float(np.mean(np.asarray(group.entropy_estimates)))
    outside = (ratios < 1.0 - cfg.clip_eps) | (ratios > 1.0 + cfg.clip_eps)

    diagnostics = LossDiagnostics(
        surrogate=surrogate,
        kl_penalty=kl_penalty,
        entropy_bonus=entropy_bonus,
        clip_fraction=float(np.mean(outside)),
        mean_ratio=float(np.mean(ratios)),
        advantages=tuple(float(a) for a in advantages),
    )
    return surrogate + kl_penalty - entropy_bonus, diagnostics


def update_kl_beta(beta, observed_kl, cfg: GrpoConfig):
    """One step of the exponential KL controller, clamped to [1e-8, 10]."""
    updated = beta * math.exp(cfg.kl_coef * (observed_kl / cfg.kl_target - 1.0))
    return min(KL_BETA_MAX, max(KL_BETA_MIN, updated))


class AdaptiveKLController:
    def __init__(self, cfg: GrpoConfig, beta=None):
        self.cfg = cfg
        self.value = cfg.kl_beta_init if beta is None else beta
        self.history = [self.value]

    def update(self, observed_kl):
        if not math.isfinite(observed_kl) or observed_kl < 0:
            raise GrpoInputError(f"observed KL must be finite and non-negative, got {observed_kl}")
        self.value = update_kl_beta(self.value, observed_kl, self.cfg)
        self.history.append(self.value)
        return self.value

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import List, Tuple

import jinja2

from errors import (
    ContextEngineError,
    InvalidScoreError,
    JudgeFormatError,
    MissingTagError,
    PairwiseComparisonError,
    ScoreOutOfRangeError,
    VerdictParseError,
)
from modules.context_pruning.prompts import format_character_settings, render_dialogue

from .chat_client import ChatCompletionsClient

logger = logging.getLogger(__name__)

JUDGE_TEMPLATE_VERSION = "v1"
MIN_SCORE = 0
MAX_SCORE = 5

_TEMPLATE_DIR = Path(__file__).resolve().parent / "prompts"
_REASON_RE = re.compile(r"<reason>(.*?)</reason>", re.DOTALL)
_SCORE_RE = re.compile(r"<score>(.*?)</score>", re.DOTALL)
_INTEGER_RE = re.compile(r"^[+-]?\d+$")

REASK_MESSAGE = (
    "Your previous answer could not be read. Reply again with exactly one "
    "<reason>...</reason> tag followed by one <score>[0-5]</score> tag holding an integer."
)


@dataclass(frozen=True)
class JudgeVerdict:
    reason: str
    score: int

    def __post_init__(self):
        if isinstance(self.score, bool) or not isinstance(self.score, int):
            raise InvalidScoreError(f"score must be an integer, got {self.score!r}")
        if not MIN_SCORE <= self.score <= MAX_SCORE:
            raise ScoreOutOfRangeError(f"score {self.score} outside {MIN_SCORE}..{MAX_SCORE}")

    def to_dict(self):
        return {'reason': self.reason, 'score': self.score}


@dataclass(frozen=True)
class PairwiseOutcome:
    wins_a: int = 0
    wins_b: int = 0
    draws: int = 0
    scores: Tuple[Tuple[str, int, int], ...] = field(default_factory=tuple)

    @property
    def total(self):
        return self.wins_a + self.wins_b + self.draws

    def _percent(self, count):
        return round(100.0 * count / self.total, 1) if self.total else 0.0

    def to_dict(self):
        return {
            'wins_a': self.wins_a,
            'wins_b': self.wins_b,
            'draws': self.draws,
            'total': self.total,
            'win_rate_a': self._percent(self.wins_a),
            'win_rate_b': self._percent(self.wins_b),
            'draw_rate': self._percent(self.draws),
            'scores': [
                {'episode_id': episode_id, 'score_a': a, 'score_b': b}
                for episode_id, a, b in self.scores
            ],
        }


@lru_cache(maxsize=None)
def _load_template():
    env = jinja2.Environment(
        loader=jinja2.FileSystemLoader(str(_TEMPLATE_DIR)),
        autoescape=False,
        undefined=jinja2.StrictUndefined,
    )
    return env.get_template(f"judge.{JUDGE_TEMPLATE_VERSION}.j2")


def build_judge_prompt(episode, candidate_response, include_reference=False):
    reference = episode.reference_response if include_reference else None
    return _load_template().render(
        character_settings=format_character_settings(episode.persona),
        worldview=episode.persona.worldview,
        dialogue=render_dialogue(episode.messages),
        candidate=candidate_response or "",
        reference=reference or "",
    )


def parse_verdict(text):
    """Read the first ``<reason>`` and ``<score>`` tags of a judge reply.

    Raises:
        MissingTagError: either tag is absent.
        InvalidScoreError: the score is not an integer.
        ScoreOutOfRangeError: the score is outside 0..5.
    """
    text = text or ""
    reason = _REASON_RE.search(text)
    score = _SCORE_RE.search(text)
    if reason is None:
        raise MissingTagError("judge reply has no <reason> tag")
    if score is None:
        raise MissingTagError("judge reply has no <score> tag")
    raw = score.group(1).strip()
    if not _INTEGER_RE.match(raw):
        raise InvalidScoreError(f"judge score {raw!r} is not an integer")
    return JudgeVerdict(reason=reason.group(1).strip(), score=int(raw))


def judge_response(cfg, episode, candidate_response, client=None, include_reference=False):
    """Score one NPC response at temperature 0; an unreadable reply is re-asked once."""
    client = client or ChatCompletionsClient(cfg)
    messages = [{'role': 'user', 'content': build_judge_prompt(episode, candidate_response, include_reference)}]
    reply = client.complete(messages, temperature=0.0)
    try:
        return parse_verdict(reply)
    except VerdictParseError as e:
        logger.warning(f"Judge reply for episode '{episode.id}' unreadable ({e}), asking again")

    messages += [
        {'role': 'assistant', 'content': reply},
        {'role': 'user', 'content': REASK_MESSAGE},
    ]
    retry_reply = client.complete(messages, temperature=0.0)
    try:
        return parse_verdict(retry_reply)
    except VerdictParseError as e:
        raise JudgeFormatError(f"Judge reply for episode '{episode.id}' unreadable after re-ask: {e}") from e


def pairwise_compare(cfg, episodes, responses_a, responses_b, client=None, include_reference=False):
    episodes = list(episodes)
    responses_a = list(responses_a)
    responses_b = list(responses_b)
    if not len(episodes) == len(responses_a) == len(responses_b):
        raise ValueError(
            f"length mismatch: {len(episodes)} episodes, "
            f"{len(responses_a)} responses A, {len(responses_b)} responses B"
        )
    client = client or ChatCompletionsClient(cfg)

    def _score(index, response):
        return judge_response(cfg, episodes[index], response, client, include_reference).score

    slots: List[List[int]] = [[0, 0] for _ in episodes]
    with ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
        futures = []
        for index in range(len(episodes)):
            for side, response in enumerate((responses_a[index], responses_b[index])):
                futures.append((index, side, pool.submit(_score, index, response)))
        for index, side, future in futures:
            try:
                slots[index][side] = future.result()
            except ContextEngineError as e:
                for _, _, pending in futures:
                    pending.cancel()
                raise PairwiseComparisonError(episodes[index].id, e) from e

    wins_a = sum(1 for a, b in slots if a > b)
    wins_b = sum(1 for a, b in slots if b > a)
    outcome = PairwiseOutcome(
        wins_a=wins_a,
        wins_b=wins_b,
        draws=len(slots) - wins_a - wins_b,
        scores=tuple((episode.id, a, b) for episode, (a, b) in zip(episodes, slots)),
    )
    logger.info(f"Pairwise comparison over {outcome.total} episodes: "
                f"{outcome.wins_a} A wins, {outcome.wins_b} B wins, {outcome.draws} draws")
    return outcome

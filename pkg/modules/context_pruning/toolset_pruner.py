import logging
import math
import re
from dataclasses import dataclass, field
from typing import List, Tuple

from errors import NoUserMessageError
from models.core import Role
from modules.core_model import count_context_tokens

logger = logging.getLogger(__name__)

MAX_REMOVED_TOOLS = 3
TRUNCATION_FRACTION = 0.1
NAME_WEIGHT = 2
DESCRIPTION_WEIGHT = 1

_TERM_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class RelevanceScore:
    tool_name: str
    score: float
    original_index: int

    @property
    def sort_key(self):
        return (-self.score, self.original_index)


@dataclass
class PruneReport:
    removed_tools: List[str] = field(default_factory=list)
    truncation_passes: int = 0
    final_tokens: int = 0
    floor_reached: bool = False
    stage_tokens: List[Tuple[str, int]] = field(default_factory=list)

    def to_dict(self):
        return {
            'removed_tools': list(self.removed_tools),
            'truncation_passes': self.truncation_passes,
            'final_tokens': self.final_tokens,
            'floor_reached': self.floor_reached,
            'stage_tokens': [[stage, tokens] for stage, tokens in self.stage_tokens],
        }


def _terms(text):
    return list(dict.fromkeys(_TERM_RE.findall((text or "").casefold())))


def extract_last_user_query(messages):
    for message in reversed(list(messages)):
        if message.role is Role.USER:
            return message.content
    raise NoUserMessageError("message history contains no user message")


def score_relevance(tool, query, original_index=0):
    """Weighted lexical overlap between the query and a tool.

    Each distinct query term scores 2 when it is a word of the tool name and 1
    when it is a word of the description.
    """
    name_terms = set(_terms(tool.name))
    description_terms = set(_terms(tool.description))
    score = 0
    for term in _terms(query):
        if term in name_terms:
            score += NAME_WEIGHT
        if term in description_terms:
            score += DESCRIPTION_WEIGHT
    return RelevanceScore(tool_name=tool.name, score=score, original_index=original_index)


def sort_by_relevance(tools, query):
    scores = [score_relevance(tool, query, index) for index, tool in enumerate(tools)]
    order = sorted(scores, key=lambda s: s.sort_key)
    return [tools[s.original_index] for s in order]


def truncate_description(text, fraction=TRUNCATION_FRACTION):
    """Drop the trailing ceil(fraction * len) characters of ``text``."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if not text:
        return ""
    # guard against 0.1 * 30 == 3.0000000000000004
    remove = max(1, math.ceil(fraction * len(text) - 1e-9))
    return text[:max(0, len(text) - remove)]


def prune_toolset(messages, tools, budget, reserved_tokens=0, counter=None):
    """Cascade of relevance reorder, bounded tool removal and description cuts.

    Returns the optimized toolset and a PruneReport. The input toolset is
    never modified; when the context cannot be made to fit even with every
    description emptied, ``floor_reached`` is set and the best effort is
    returned.
    """
    messages = list(messages)
    pruned = list(tools)
    limit = budget.input_limit - reserved_tokens
    report = PruneReport()

    def measure(stage):
        tokens = count_context_tokens(messages, pruned, counter=counter)
        report.stage_tokens.append((stage, tokens))
        report.final_tokens = tokens
        return tokens

    if measure('initial') <= limit:
        return pruned, report

    # Stage 1
    try:
        query = extract_last_user_query(messages)
    except NoUserMessageError:
        query = ""
    pruned = sort_by_relevance(pruned, query)
    if measure('reorder') <= limit:
        return pruned, report

    # Stage 2
    for _ in range(MAX_REMOVED_TOOLS):
        if not pruned:
            break
        removed = pruned.pop()
        report.removed_tools.append(removed.name)
        if measure('remove') <= limit:
            logger.info(f"Pruned tools {report.removed_tools} to fit {limit} tokens")
            return pruned, report

    # Stage 3
    while any(tool.description for tool in pruned):
        pruned = [tool.with_description(truncate_description(tool.description)) for tool in pruned]
        report.truncation_passes += 1
        if measure('truncate') <= limit:
            return pruned, report

    report.floor_reached = True
    logger.warning(
        f"Toolset pruning reached its floor at {report.final_tokens} tokens (limit {limit})"
    )
    return pruned, report

import logging
import re

from models.core import PersonaComponents
from modules.core_model import count_context_tokens, count_tokens

from .prompts import render_persona_prompt

logger = logging.getLogger(__name__)

MAX_REDUCTION_LEVEL = len(PersonaComponents.SALIENCE_ORDER)
RETENTION_STEP = 0.25

_SENTENCE_END_RE = re.compile(r"[.!?。！？](?=\s|$)")


def retention_fraction(level):
    return max(0.0, 1.0 - RETENTION_STEP * level)


def truncate_component(text, level):
    """Keep roughly ``retention_fraction(level)`` of the text.

    The cut lands on the last sentence end inside the kept span; text with no
    sentence end there is cut at the character limit.
    """
    if not text:
        return ""
    keep = int(len(text) * retention_fraction(level))
    if keep <= 0:
        return ""
    if keep >= len(text):
        return text
    head = text[:keep]
    boundaries = list(_SENTENCE_END_RE.finditer(text[:keep + 1]))
    boundaries = [m for m in boundaries if m.end() <= keep]
    if boundaries:
        head = text[:boundaries[-1].end()]
    return head.rstrip()


def _check_level(level):
    if isinstance(level, bool) or not isinstance(level, int) or not 0 <= level <= MAX_REDUCTION_LEVEL:
        raise ValueError(f"reduction level must be an integer in 0..{MAX_REDUCTION_LEVEL}, got {level!r}")


def distill_components(components, level):
    """Truncate persona fields in salience order, most peripheral first.

    Level k touches the first k fields of [state, role, worldview, knowledge,
    npc_info]; the i-th of them keeps ``retention_fraction(i)`` of its text.
    """
    _check_level(level)
    changes = {}
    for step in range(1, level + 1):
        name = PersonaComponents.SALIENCE_ORDER[step - 1]
        changes[name] = truncate_component(getattr(components, name), step)
    return components.replace(**changes) if changes else components


def distill_persona(components, level):
    return render_persona_prompt(distill_components(components, level))


def select_reduction_level(components, messages, tools, budget, reserved_tokens=0, counter=None):
    """Smallest reduction level whose assembled prompt fits the input budget."""
    limit = budget.input_limit - reserved_tokens
    messages = list(messages)
    tools = list(tools)
    for level in range(MAX_REDUCTION_LEVEL + 1):
        prompt = distill_persona(components, level)
        if count_context_tokens(messages, tools, prompt, counter=counter) <= limit:
            return level
    logger.warning(f"No persona reduction level fits {limit} tokens, using {MAX_REDUCTION_LEVEL}")
    return MAX_REDUCTION_LEVEL


def task2_reserved_tokens(function_results, counter=None):
    return count_tokens(function_results, counter)

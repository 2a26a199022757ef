"""Token accounting shared by toolset pruning and persona distillation.

The agent's tokenizer is not known up front, so counting goes through a small
``TokenCounter`` interface. The default is the usual 4-characters-per-token
estimate with a fixed overhead of 4 tokens per chat message.
"""
import json
import math
from typing import Iterable, Optional, Protocol

CHARS_PER_TOKEN = 4
TOKENS_PER_MESSAGE = 4


class TokenCounter(Protocol):
    per_message_overhead: int

    def count(self, text: str) -> int:
        ...


class HeuristicTokenCounter:
    def __init__(self, chars_per_token=CHARS_PER_TOKEN, per_message_overhead=TOKENS_PER_MESSAGE):
        if chars_per_token <= 0:
            raise ValueError("chars_per_token must be positive")
        self.chars_per_token = chars_per_token
        self.per_message_overhead = per_message_overhead

    def count(self, text):
        if not text:
            return 0
        return math.ceil(len(text) / self.chars_per_token)

    def __repr__(self):
        return (f"HeuristicTokenCounter(chars_per_token={self.chars_per_token}, "
                f"per_message_overhead={self.per_message_overhead})")


DEFAULT_COUNTER = HeuristicTokenCounter()


def get_token_counter(config=None):
    if not config:
        return DEFAULT_COUNTER
    return HeuristicTokenCounter(
        per_message_overhead=int(config.get('TOKENS_PER_MESSAGE', TOKENS_PER_MESSAGE)),
    )


def count_tokens(text, counter: Optional[TokenCounter] = None):
    return (counter or DEFAULT_COUNTER).count(text)


def serialize_message(message):
    """Countable text of a message: its content, then one block per tool call."""
    parts = [message.content]
    parts.extend(call.to_block() for call in message.tool_calls)
    return "\n".join(parts) if message.tool_calls else message.content


def serialize_tool(tool):
    return json.dumps(tool.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def count_context_tokens(messages: Iterable, tools: Iterable, persona_prompt=None,
                         counter: Optional[TokenCounter] = None):
    counter = counter or DEFAULT_COUNTER
    total = 0
    for message in messages:
        total += counter.count(serialize_message(message)) + counter.per_message_overhead
    for tool in tools:
        total += counter.count(serialize_tool(tool))
    if persona_prompt:
        total += counter.count(persona_prompt)
    return total

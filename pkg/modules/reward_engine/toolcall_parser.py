"""Extraction of ``<tool_call>`` blocks from model output.

Each block wraps one JSON object::

    <tool_call>{"name": "sell_item", "arguments": {"item": "iron_sword"}}</tool_call>

``arguments`` may also arrive as a JSON-encoded string holding an object.
Blocks that do not match this shape are counted as malformed and skipped.
"""
import json
import logging

from models.core import ToolCall, is_argument_value

logger = logging.getLogger(__name__)

OPEN_TAG = "<tool_call>"
CLOSE_TAG = "</tool_call>"


class MalformedBlock(ValueError):
    pass


def parse_tool_call_block(payload):
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as e:
        raise MalformedBlock(f"invalid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise MalformedBlock("payload is not an object")

    name = data.get("name")
    if not isinstance(name, str) or not name.strip():
        raise MalformedBlock("missing function name")
    if "arguments" not in data:
        raise MalformedBlock("missing arguments")

    arguments = data["arguments"]
    if isinstance(arguments, str):
        try:
            arguments = json.loads(arguments)
        except json.JSONDecodeError as e:
            raise MalformedBlock(f"arguments string is not JSON: {e.msg}") from e
    if not isinstance(arguments, dict):
        raise MalformedBlock("arguments is not an object")
    for key, value in arguments.items():
        if not is_argument_value(value):
            raise MalformedBlock(f"unsupported value for argument '{key}'")

    return ToolCall(name, arguments)


def parse_tool_calls(text):
    """Return ``(calls, malformed)`` for every block in ``text``, in order."""
    calls = []
    malformed = 0
    position = 0
    text = text or ""
    while True:
        start = text.find(OPEN_TAG, position)
        if start == -1:
            break
        end = text.find(CLOSE_TAG, start + len(OPEN_TAG))
        if end == -1:
            malformed += 1
            break
        payload = text[start + len(OPEN_TAG):end]
        position = end + len(CLOSE_TAG)
        try:
            calls.append(parse_tool_call_block(payload))
        except MalformedBlock as e:
            logger.debug(f"Skipping malformed tool call block: {e}")
            malformed += 1
    return calls, malformed

"""Prompt templates for the tool-calling (Task 1) and dialogue (Task 2) turns.

Templates are Jinja2 text assets under ``prompts/``; the version is part of
the file name so a changed wording never silently alters golden outputs.

Slots:
    task1: ``functions``, ``knowledge``, ``dialogue``
    task2: ``character_settings``, ``function_knowledge``, ``item_knowledge``,
           ``worldview``, ``dialogue``
"""
from functools import lru_cache
from pathlib import Path

import jinja2

from modules.core_model import count_tokens, serialize_message, serialize_tool

TEMPLATE_VERSION = "v1"
_TEMPLATE_DIR = Path(__file__).resolve().parent / "prompts"

TASK1_SLOTS = ("functions", "knowledge", "dialogue")
TASK2_SLOTS = ("character_settings", "function_knowledge", "item_knowledge", "worldview", "dialogue")


@lru_cache(maxsize=None)
def _environment():
    return jinja2.Environment(
        loader=jinja2.FileSystemLoader(str(_TEMPLATE_DIR)),
        autoescape=False,
        undefined=jinja2.StrictUndefined,
    )


def _render(name, **slots):
    template = _environment().get_template(f"{name}.{TEMPLATE_VERSION}.j2")
    return template.render(**slots)


def render_dialogue(messages):
    return "\n".join(f"{m.role.value}: {serialize_message(m)}" for m in messages)


def render_functions(tools):
    return "\n".join(serialize_tool(tool) for tool in tools)


def format_character_settings(components):
    return (
        f"Role: {components.role}\n"
        f"State: {components.state}\n"
        f"NPC information: {components.npc_info}"
    )


def render_task1_prompt(episode, pruned_tools):
    return _render(
        "task1",
        functions=render_functions(pruned_tools),
        knowledge=episode.persona.knowledge,
        dialogue=render_dialogue(episode.messages),
    )


def render_task2_prompt(episode, distilled_persona, function_results=""):
    """Render the role-play prompt from already distilled persona components."""
    return _render(
        "task2",
        character_settings=format_character_settings(distilled_persona),
        function_knowledge=function_results or "",
        item_knowledge=distilled_persona.knowledge,
        worldview=distilled_persona.worldview,
        dialogue=render_dialogue(episode.messages),
    )


def render_persona_prompt(components):
    return _render(
        "task2",
        character_settings=format_character_settings(components),
        function_knowledge="",
        item_knowledge=components.knowledge,
        worldview=components.worldview,
        dialogue="",
    )


def prompt_skeleton_tokens(task, counter=None):
    """Tokens of a template rendered with every slot left empty."""
    slots = TASK1_SLOTS if task == "task1" else TASK2_SLOTS
    return count_tokens(_render(task, **{slot: "" for slot in slots}), counter)


def task1_reserved_tokens(episode, counter=None):
    """Tokens the Task-1 prompt spends outside the messages and tool schemas."""
    separators = "\n" * len(episode.tools)
    return (
        prompt_skeleton_tokens("task1", counter)
        + count_tokens(episode.persona.knowledge, counter)
        + count_tokens(separators, counter)
    )

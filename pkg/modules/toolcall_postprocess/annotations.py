"""Per-toolset annotation annex.

JSON shape::

    {
      "functions": {"sell_item": ["disposal"], "check_items": ["check"]},
      "arguments": {"item": ["item-reference"], "items": ["item-reference"]},
      "rules": {"!=": "not equal to"}
    }

``functions`` tags function names (``disposal``, ``check``), ``arguments``
tags argument names (``item-reference``) and ``rules`` extends the default
comparison-symbol table.
"""
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Tuple

DISPOSAL = "disposal"
CHECK = "check"
ITEM_REFERENCE = "item-reference"

FUNCTION_TAGS = frozenset({DISPOSAL, CHECK})
ARGUMENT_TAGS = frozenset({ITEM_REFERENCE})


@dataclass(frozen=True)
class NormalizationRule:
    pattern: str
    replacement: str


DEFAULT_RULES: Tuple[NormalizationRule, ...] = (
    NormalizationRule(">", "more than"),
    NormalizationRule("<", "less than"),
    NormalizationRule(">=", "at least"),
    NormalizationRule("<=", "at most"),
    NormalizationRule("=", "equal to"),
)


@dataclass(frozen=True)
class ToolAnnotations:
    functions: Mapping[str, frozenset] = field(default_factory=dict)
    arguments: Mapping[str, frozenset] = field(default_factory=dict)
    rules: Tuple[NormalizationRule, ...] = DEFAULT_RULES

    def __post_init__(self):
        functions = {name: frozenset(tags) for name, tags in self.functions.items()}
        arguments = {name: frozenset(tags) for name, tags in self.arguments.items()}
        for name, tags in functions.items():
            unknown = tags - FUNCTION_TAGS
            if unknown:
                raise ValueError(f"unknown function tags for '{name}': {sorted(unknown)}")
        for name, tags in arguments.items():
            unknown = tags - ARGUMENT_TAGS
            if unknown:
                raise ValueError(f"unknown argument tags for '{name}': {sorted(unknown)}")
        patterns = [rule.pattern for rule in self.rules]
        replacements = [rule.replacement for rule in self.rules]
        if len(set(patterns)) != len(patterns) or len(set(replacements)) != len(replacements):
            raise ValueError("normalization rules must map patterns to replacements one-to-one")
        object.__setattr__(self, "functions", MappingProxyType(functions))
        object.__setattr__(self, "arguments", MappingProxyType(arguments))
        object.__setattr__(self, "rules", tuple(self.rules))

    def is_disposal(self, function_name):
        return DISPOSAL in self.functions.get(function_name, ())

    def is_item_reference(self, argument_name):
        return ITEM_REFERENCE in self.arguments.get(argument_name, ())

    @property
    def phrases(self):
        return tuple(rule.replacement for rule in self.rules)

    def symbol_map(self):
        return {rule.pattern: rule.replacement for rule in self.rules}

    def to_dict(self):
        extra = [r for r in self.rules if r not in DEFAULT_RULES]
        return {
            'functions': {name: sorted(tags) for name, tags in self.functions.items()},
            'arguments': {name: sorted(tags) for name, tags in self.arguments.items()},
            'rules': {rule.pattern: rule.replacement for rule in extra},
        }

    @classmethod
    def from_dict(cls, data):
        data = data or {}
        rules = list(DEFAULT_RULES)
        for pattern, replacement in (data.get('rules') or {}).items():
            rules = [r for r in rules if r.pattern != pattern]
            rules.append(NormalizationRule(pattern, replacement))
        return cls(
            functions=data.get('functions') or {},
            arguments=data.get('arguments') or {},
            rules=tuple(rules),
        )


EMPTY_ANNOTATIONS = ToolAnnotations()


def load_annotations(path):
    with open(path, encoding='utf-8') as handle:
        return ToolAnnotations.from_dict(json.load(handle))


def merge_annotations(base, override):
    """Combine a toolset-wide annex with one carried by a single episode."""
    if override is None:
        return base or EMPTY_ANNOTATIONS
    if base is None:
        return override
    functions = dict(base.functions)
    functions.update(override.functions)
    arguments = dict(base.arguments)
    arguments.update(override.arguments)
    rules = {rule.pattern: rule for rule in base.rules}
    rules.update({rule.pattern: rule for rule in override.rules})
    return ToolAnnotations(functions=functions, arguments=arguments, rules=tuple(rules.values()))

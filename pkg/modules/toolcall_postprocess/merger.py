import json
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from errors import ParameterCoercionError
from models.core import ParamKind, ToolCall

from .annotations import EMPTY_ANNOTATIONS
from .normalizer import coerce_arguments, normalize_parameters, normalize_with_count

logger = logging.getLogger(__name__)

UNKNOWN_FUNCTION = "unknown function"
EQUIPPED_ITEM_CONFLICT = "equipped-item conflict"


@dataclass
class PostprocessReport:
    dropped_calls: List[Tuple[ToolCall, str]] = field(default_factory=list)
    merged_groups: List[Tuple[Tuple[ToolCall, ...], ToolCall]] = field(default_factory=list)
    coercions: int = 0

    def drop(self, call, reason):
        if not reason:
            raise ValueError("a dropped call needs a reason")
        self.dropped_calls.append((call, reason))

    def extend(self, other):
        self.dropped_calls.extend(other.dropped_calls)
        self.merged_groups.extend(other.merged_groups)
        self.coercions += other.coercions

    def to_dict(self):
        return {
            'dropped_calls': [
                {'call': call.to_dict(), 'reason': reason} for call, reason in self.dropped_calls
            ],
            'merged_groups': [
                {'inputs': [call.to_dict() for call in inputs], 'output': output.to_dict()}
                for inputs, output in self.merged_groups
            ],
            'coercions': self.coercions,
        }


def _item_values(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _item_references(call, annotations):
    for name, value in call.arguments.items():
        if annotations.is_item_reference(name):
            for item in _item_values(value):
                yield name, item


def validate_against_kb(call, kb, annotations=None):
    """Check every item-reference argument of ``call`` against the knowledge base.

    Returns ``(valid, reasons)``; each reason reads ``unknown item: <arg>=<value>``.
    Without a knowledge base nothing is checked.
    """
    if kb is None:
        return True, []
    annotations = annotations or EMPTY_ANNOTATIONS
    reasons = [
        f"unknown item: {name}={item}"
        for name, item in _item_references(call, annotations)
        if kb.resolve(item) is None
    ]
    return not reasons, reasons


def _touches_equipped_item(call, kb, annotations):
    if kb is None or not annotations.is_disposal(call.function_name):
        return False
    for _, item in _item_references(call, annotations):
        record = kb.resolve(item)
        if record is not None and record.equipped:
            return True
    return False


def _union(first, second):
    seen = set()
    merged = []
    for value in list(first) + list(second):
        key = json.dumps(value)
        if key not in seen:
            seen.add(key)
            merged.append(value)
    return merged


_MISSING = object()


def _combine(left, right, schema):
    """The merged call, or None when the two calls cannot be consolidated."""
    if left.function_name != right.function_name:
        return None
    if left == right:
        return left
    names = set(left.arguments) | set(right.arguments)
    differing = [
        name for name in names
        if left.arguments.get(name, _MISSING) != right.arguments.get(name, _MISSING)
    ]
    if len(differing) != 1:
        return None
    name = differing[0]
    a, b = left.arguments.get(name, _MISSING), right.arguments.get(name, _MISSING)
    if not isinstance(a, tuple) or not isinstance(b, tuple):
        return None
    if schema is not None:
        param = schema.parameters.get(name)
        if param is None or param.kind is not ParamKind.ARRAY:
            return None
    arguments = dict(left.arguments)
    arguments[name] = _union(a, b)
    return left.replace_arguments(arguments)


def _consolidate(entries, schemas):
    entries = list(entries)
    merged = True
    while merged:
        merged = False
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                output, inputs = entries[i]
                other, other_inputs = entries[j]
                combined = _combine(output, other, schemas.get(output.function_name))
                if combined is not None:
                    entries[i] = (combined, inputs + other_inputs)
                    del entries[j]
                    merged = True
                    break
            if merged:
                break
    return entries


def merge_function_calls(calls, toolset, kb=None, annotations=None):
    """Drop invalid calls, then collapse duplicates and union-merge array variants.

    Per input call, checks run in order: unknown function (only when a toolset
    is given), disposal of an equipped item, unknown item references. Merging
    repeats until no two surviving calls combine, so the result is stable
    under a second pass. Output order follows first appearance.
    """
    annotations = annotations or EMPTY_ANNOTATIONS
    schemas = {tool.name: tool for tool in toolset or ()}
    report = PostprocessReport()

    entries = []
    for call in calls:
        if schemas and call.function_name not in schemas:
            report.drop(call, UNKNOWN_FUNCTION)
            continue
        if _touches_equipped_item(call, kb, annotations):
            report.drop(call, EQUIPPED_ITEM_CONFLICT)
            continue
        valid, reasons = validate_against_kb(call, kb, annotations)
        if not valid:
            report.drop(call, "; ".join(reasons))
            continue
        entries.append((call, [call]))

    entries = _consolidate(entries, schemas)
    for output, inputs in entries:
        if len(inputs) > 1:
            report.merged_groups.append((tuple(inputs), output))

    if report.dropped_calls:
        logger.info(f"Dropped {len(report.dropped_calls)} of {len(calls)} tool calls")
    return [output for output, _ in entries], report


def postprocess_calls(calls, toolset, user_query="", kb=None, annotations=None):
    annotations = annotations or EMPTY_ANNOTATIONS
    schemas = {tool.name: tool for tool in toolset or ()}
    report = PostprocessReport()
    normalized = []
    for call in calls:
        schema = schemas.get(call.function_name)
        if schema is None:
            normalized.append(call)
            continue
        try:
            call, changes = normalize_with_count(call, schema, user_query, annotations)
        except ParameterCoercionError as e:
            report.drop(call, str(e))
            continue
        report.coercions += changes
        normalized.append(call)

    merged, merge_report = merge_function_calls(normalized, toolset, kb, annotations)
    report.extend(merge_report)
    return merged, report


def canonicalize_reference_calls(calls, toolset, user_query="", annotations=None):
    """Bring reference calls into the canonical form ``postprocess_calls`` gives predictions.

    Same normalization and merge rule, but nothing is dropped: a call without a
    schema is kept as is and a value that fails to coerce stays unconverted.
    """
    annotations = annotations or EMPTY_ANNOTATIONS
    schemas = {tool.name: tool for tool in toolset or ()}
    entries = []
    for call in calls:
        schema = schemas.get(call.function_name)
        if schema is not None:
            try:
                call = normalize_parameters(call, schema, user_query, annotations)
            except ParameterCoercionError:
                call = coerce_arguments(call, schema, annotations)
        entries.append((call, [call]))
    return [output for output, _ in _consolidate(entries, schemas)]

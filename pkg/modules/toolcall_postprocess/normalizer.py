import math
import re

from errors import ParameterCoercionError
from models.core import ParamKind

from .annotations import EMPTY_ANNOTATIONS

OPERATOR_PARAMETER_NAMES = ("operator", "op", "comparison")

_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_TRUE_WORDS = frozenset({"true", "yes", "1"})
_FALSE_WORDS = frozenset({"false", "no", "0"})


def _symbol_pattern(annotations):
    symbols = sorted(annotations.symbol_map(), key=len, reverse=True)
    return "|".join(re.escape(symbol) for symbol in symbols)


def _phrase_pattern(annotations):
    phrases = sorted(annotations.phrases, key=len, reverse=True)
    return "|".join(re.escape(phrase) for phrase in phrases)


def canonicalize_symbols(value, annotations=EMPTY_ANNOTATIONS):
    """Replace a comparison symbol by its canonical phrase.

    Handles a bare symbol (``">"``) and a leading symbol of a compound value
    (``"> 5"`` becomes ``"more than 5"``).
    """
    if not annotations.rules:
        return value
    symbol_map = annotations.symbol_map()
    stripped = value.strip()
    if stripped in symbol_map:
        return symbol_map[stripped]
    match = re.match(rf"^\s*({_symbol_pattern(annotations)})\s*([+-]?\d+(?:\.\d+)?)\s*$", value)
    if match:
        return f"{symbol_map[match.group(1)]} {match.group(2).strip()}"
    return value


def split_compound(value, annotations=EMPTY_ANNOTATIONS):
    """``"more than 5"`` -> ``("more than", 5)``; None when not a compound."""
    if not isinstance(value, str) or not annotations.rules:
        return None
    match = re.match(
        rf"^\s*({_phrase_pattern(annotations)})\s+([+-]?\d+(?:\.\d+)?)\s*$", value, re.IGNORECASE
    )
    if not match:
        return None
    phrase = match.group(1).lower()
    for canonical in annotations.phrases:
        if canonical.lower() == phrase:
            phrase = canonical
    number = match.group(2)
    return phrase, int(number) if _INTEGER_RE.match(number) else float(number)


def infer_operator(user_query, annotations=EMPTY_ANNOTATIONS):
    """The canonical phrase named in the query, if exactly one is."""
    if not user_query or not annotations.rules:
        return None
    symbol_map = annotations.symbol_map()
    pattern = rf"\b(?:{_phrase_pattern(annotations)})\b|{_symbol_pattern(annotations)}"
    found = set()
    for match in re.finditer(pattern, user_query, re.IGNORECASE):
        token = match.group(0)
        if token in symbol_map:
            found.add(symbol_map[token])
        else:
            found.update(p for p in annotations.phrases if p.lower() == token.lower())
    if len(found) == 1:
        return found.pop()
    return None


def find_operator_parameter(schema, annotations=EMPTY_ANNOTATIONS):
    phrases = set(annotations.phrases)
    symbols = set(annotations.symbol_map())
    for name, param in schema.parameters.items():
        if name in OPERATOR_PARAMETER_NAMES or name.endswith("_operator"):
            return name
        if param.kind is ParamKind.ENUM and set(param.allowed_values) <= (phrases | symbols):
            return name
    return None


def find_value_parameter(schema, operator_parameter):
    for name, param in schema.parameters.items():
        if name != operator_parameter and param.is_numeric:
            return name
    return None


def _format_number(value):
    return str(value)


def _coerce_scalar(value, kind, allowed_values=(), annotations=EMPTY_ANNOTATIONS):
    """Return (ok, value) for a lossless conversion to ``kind``."""
    if kind is ParamKind.STRING:
        if isinstance(value, str):
            return True, value
        if isinstance(value, bool):
            return False, value
        if isinstance(value, (int, float)):
            return True, _format_number(value)
        return False, value

    if kind is ParamKind.INTEGER:
        if isinstance(value, bool):
            return False, value
        if isinstance(value, int):
            return True, value
        if isinstance(value, float):
            return (True, int(value)) if value.is_integer() else (False, value)
        if isinstance(value, str):
            text = value.strip()
            if _INTEGER_RE.match(text):
                return True, int(text)
            try:
                number = float(text)
            except ValueError:
                return False, value
            if math.isfinite(number) and number.is_integer():
                return True, int(number)
        return False, value

    if kind is ParamKind.NUMBER:
        if isinstance(value, bool):
            return False, value
        if isinstance(value, (int, float)):
            return True, value
        if isinstance(value, str):
            text = value.strip()
            if _INTEGER_RE.match(text):
                return True, int(text)
            try:
                number = float(text)
            except ValueError:
                return False, value
            if math.isfinite(number):
                return True, number
        return False, value

    if kind is ParamKind.BOOLEAN:
        if isinstance(value, bool):
            return True, value
        if isinstance(value, int) and value in (0, 1):
            return True, bool(value)
        if isinstance(value, str):
            word = value.strip().lower()
            if word in _TRUE_WORDS:
                return True, True
            if word in _FALSE_WORDS:
                return True, False
        return False, value

    if kind is ParamKind.ENUM:
        if any(value == a and type(value) is type(a) for a in allowed_values):
            return True, value
        if isinstance(value, str):
            text = value.strip()
            for allowed in allowed_values:
                if isinstance(allowed, str) and allowed.casefold() == text.casefold():
                    return True, allowed
            for allowed in allowed_values:
                if not isinstance(allowed, str) and str(allowed) == text:
                    return True, allowed
            inverse = {rule.replacement: rule.pattern for rule in annotations.rules}
            if text in inverse and inverse[text] in allowed_values:
                return True, inverse[text]
        return False, value

    return False, value


def coerce_value(value, param, annotations=EMPTY_ANNOTATIONS):
    if param.kind is ParamKind.ARRAY:
        items = list(value) if isinstance(value, (list, tuple)) else [value]
        if param.item_kind is None:
            return True, items
        coerced = []
        for item in items:
            ok, item = _coerce_scalar(item, param.item_kind, (), annotations)
            if not ok:
                return False, value
            coerced.append(item)
        return True, coerced
    if isinstance(value, (list, tuple)):
        return False, value
    return _coerce_scalar(value, param.kind, param.allowed_values, annotations)


def _canonicalize(value, param, annotations):
    if param.kind is ParamKind.ENUM and value in param.allowed_values:
        return value
    if isinstance(value, str):
        return canonicalize_symbols(value, annotations)
    if isinstance(value, (list, tuple)):
        return [canonicalize_symbols(v, annotations) if isinstance(v, str) else v for v in value]
    return value


def normalize_with_count(call, schema, user_query="", annotations=None):
    """Normalize one call; returns the new call and how many values changed."""
    if call.function_name != schema.name:
        raise ValueError(f"call '{call.function_name}' does not match schema '{schema.name}'")
    annotations = annotations or EMPTY_ANNOTATIONS
    params = schema.parameters
    args = {name: list(v) if isinstance(v, tuple) else v for name, v in call.arguments.items()}

    for name, value in list(args.items()):
        if name in params:
            args[name] = _canonicalize(value, params[name], annotations)

    operator_param = find_operator_parameter(schema, annotations)
    value_param = find_value_parameter(schema, operator_param) if operator_param else None

    if operator_param and value_param:
        compound = split_compound(args.get(value_param), annotations)
        if compound:
            phrase, number = compound
            args[value_param] = number
            if args.get(operator_param) in (None, ""):
                args[operator_param] = phrase
        compound = split_compound(args.get(operator_param), annotations)
        if compound:
            phrase, number = compound
            args[operator_param] = phrase
            if args.get(value_param) in (None, ""):
                args[value_param] = number

    if operator_param and operator_param not in args:
        inferred = infer_operator(user_query, annotations)
        if inferred is not None and coerce_value(inferred, params[operator_param], annotations)[0]:
            args[operator_param] = inferred

    for name, value in list(args.items()):
        param = params.get(name)
        if param is None:
            continue
        ok, coerced = coerce_value(value, param, annotations)
        if ok:
            args[name] = coerced
        elif param.required:
            raise ParameterCoercionError(name, value, param.kind.value)

    normalized = call.replace_arguments(args)
    changes = sum(
        1 for name in set(call.arguments) | set(normalized.arguments)
        if call.arguments.get(name) != normalized.arguments.get(name)
        or type(call.arguments.get(name)) is not type(normalized.arguments.get(name))
    )
    return normalized, changes


def normalize_parameters(call, schema, user_query="", annotations=None):
    """Type-correct and canonicalize the arguments of one tool call. Explicit operators are kept."""
    normalized, _ = normalize_with_count(call, schema, user_query, annotations)
    return normalized


def coerce_arguments(call, schema, annotations=None):
    """Apply only the lossless type coercion; values that do not coerce stay as they are."""
    annotations = annotations or EMPTY_ANNOTATIONS
    args = dict(call.arguments)
    for name, value in call.arguments.items():
        param = schema.parameters.get(name)
        if param is None:
            continue
        ok, coerced = coerce_value(value, param, annotations)
        if ok:
            args[name] = coerced
    return call.replace_arguments(args)

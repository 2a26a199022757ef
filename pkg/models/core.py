import json
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional, Tuple


class Role(Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"
    TOOL = "tool"


class ParamKind(Enum):
    STRING = "string"
    INTEGER = "integer"
    NUMBER = "number"
    BOOLEAN = "boolean"
    ENUM = "enum"
    ARRAY = "array"


SCALAR_TYPES = (str, int, float, bool)


def _freeze(value):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return value


def _thaw(value):
    if isinstance(value, tuple):
        return list(value)
    return value


@dataclass(frozen=True)
class ParamSchema:
    kind: ParamKind
    allowed_values: Tuple[Any, ...] = ()
    required: bool = False
    item_kind: Optional[ParamKind] = None
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "allowed_values", tuple(self.allowed_values or ()))
        if (self.kind is ParamKind.ENUM) != bool(self.allowed_values):
            raise ValueError("allowed_values must be non-empty exactly when kind is enum")
        if self.item_kind is ParamKind.ARRAY:
            raise ValueError("array items must be scalar")

    @property
    def is_numeric(self):
        return self.kind in (ParamKind.INTEGER, ParamKind.NUMBER)

    def to_dict(self):
        data = {'type': self.kind.value, 'required': self.required}
        if self.allowed_values:
            data['enum'] = list(self.allowed_values)
        if self.item_kind is not None:
            data['items'] = self.item_kind.value
        if self.description:
            data['description'] = self.description
        return data

    @classmethod
    def from_dict(cls, data):
        item_kind = data.get('items')
        return cls(
            kind=ParamKind(data['type']),
            allowed_values=tuple(data.get('enum') or ()),
            required=bool(data.get('required', False)),
            item_kind=ParamKind(item_kind) if item_kind else None,
            description=data.get('description', ''),
        )


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str = ""
    parameters: Mapping[str, ParamSchema] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise ValueError("tool name must be non-empty")
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))

    def with_description(self, description):
        return ToolSpec(name=self.name, description=description, parameters=self.parameters)

    def to_dict(self):
        return {
            'name': self.name,
            'description': self.description,
            'parameters': {name: schema.to_dict() for name, schema in self.parameters.items()},
        }

    @classmethod
    def from_dict(cls, data):
        params = data.get('parameters') or {}
        return cls(
            name=data['name'],
            description=data.get('description') or '',
            parameters={name: ParamSchema.from_dict(p) for name, p in params.items()},
        )


@dataclass(frozen=True, eq=False)
class ToolCall:
    """A parsed function invocation, kept in canonical form.

    Argument keys are sorted and list values are frozen into tuples, so two
    calls with the same name and arguments compare and hash equal.
    """

    function_name: str
    arguments: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        canonical = {key: _freeze(self.arguments[key]) for key in sorted(self.arguments)}
        object.__setattr__(self, "arguments", MappingProxyType(canonical))

    @property
    def canonical_key(self):
        return json.dumps([self.function_name, self.to_dict()['arguments']], sort_keys=True)

    def __eq__(self, other):
        if not isinstance(other, ToolCall):
            return NotImplemented
        return self.canonical_key == other.canonical_key

    def __hash__(self):
        return hash(self.canonical_key)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.arguments.items())
        return f"{self.function_name}({args})"

    def to_block(self):
        payload = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return f"<tool_call>{payload}</tool_call>"

    def replace_arguments(self, arguments):
        return ToolCall(self.function_name, arguments)

    def to_dict(self):
        return {
            'name': self.function_name,
            'arguments': {key: _thaw(value) for key, value in self.arguments.items()},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['name'], data.get('arguments') or {})


@dataclass(frozen=True)
class Message:
    role: Role
    content: str = ""
    tool_calls: Tuple[ToolCall, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tool_calls", tuple(self.tool_calls or ()))
        if self.tool_calls and self.role is not Role.ASSISTANT:
            raise ValueError("tool_calls are only allowed on assistant messages")

    def to_dict(self):
        data = {'role': self.role.value, 'content': self.content}
        if self.tool_calls:
            data['tool_calls'] = [call.to_dict() for call in self.tool_calls]
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(
            role=Role(data['role']),
            content=data.get('content') or '',
            tool_calls=tuple(ToolCall.from_dict(c) for c in data.get('tool_calls') or ()),
        )


@dataclass(frozen=True)
class PersonaComponents:
    state: str = ""
    role: str = ""
    worldview: str = ""
    knowledge: str = ""
    npc_info: str = ""

    SALIENCE_ORDER = ("state", "role", "worldview", "knowledge", "npc_info")

    def __getitem__(self, index):
        return getattr(self, self.SALIENCE_ORDER[index])

    def __len__(self):
        return len(self.SALIENCE_ORDER)

    def replace(self, **changes):
        values = self.to_dict()
        values.update(changes)
        return PersonaComponents(**values)

    def to_dict(self):
        return {name: getattr(self, name) for name in self.SALIENCE_ORDER}

    @classmethod
    def from_dict(cls, data):
        return cls(**{name: data.get(name) or '' for name in cls.SALIENCE_ORDER})


@dataclass(frozen=True)
class TokenBudget:
    input_limit: int = 2000
    output_limit: int = 200

    def __post_init__(self):
        if self.input_limit <= 0 or self.output_limit <= 0:
            raise ValueError("token limits must be strictly positive")

    @classmethod
    def from_config(cls, config):
        return cls(
            input_limit=int(config.get('TOKEN_BUDGET_INPUT', 2000)),
            output_limit=int(config.get('TOKEN_BUDGET_OUTPUT', 200)),
        )

    def to_dict(self):
        return {'input_limit': self.input_limit, 'output_limit': self.output_limit}


@dataclass(frozen=True)
class ItemRecord:
    display_name: str
    equipped: bool = False
    attributes: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self):
        return {
            'display_name': self.display_name,
            'equipped': self.equipped,
            'attributes': dict(self.attributes),
        }


@dataclass(frozen=True)
class KnowledgeBase:
    """Game-item registry used to validate and conflict-check tool calls."""

    items: Mapping[str, ItemRecord] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "items", MappingProxyType(dict(self.items)))

    def resolve(self, value):
        if not isinstance(value, str):
            return None
        if value in self.items:
            return self.items[value]
        folded = value.casefold()
        for item_id, record in self.items.items():
            if item_id.casefold() == folded or record.display_name.casefold() == folded:
                return record
        return None

    def to_dict(self):
        return {item_id: record.to_dict() for item_id, record in self.items.items()}

    @classmethod
    def from_dict(cls, data):
        items = {}
        for item_id, record in (data or {}).items():
            items[item_id] = ItemRecord(
                display_name=record.get('display_name', item_id),
                equipped=bool(record.get('equipped', False)),
                attributes=dict(record.get('attributes') or {}),
            )
        return cls(items)


@dataclass(frozen=True)
class Episode:
    id: str
    persona: PersonaComponents
    messages: Tuple[Message, ...]
    tools: Tuple[ToolSpec, ...] = ()
    gold_tool_calls: Optional[Tuple[ToolCall, ...]] = None
    reference_response: Optional[str] = None
    knowledge_base: Optional[KnowledgeBase] = None
    function_results: str = ""
    annotations: Optional[Mapping[str, Any]] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("episode id must be non-empty")
        object.__setattr__(self, "messages", tuple(self.messages))
        object.__setattr__(self, "tools", tuple(self.tools))
        if not self.messages:
            raise ValueError("episode messages must be non-empty")
        names = [tool.name for tool in self.tools]
        if len(names) != len(set(names)):
            raise ValueError("tool names must be unique within an episode")
        if self.gold_tool_calls is not None:
            object.__setattr__(self, "gold_tool_calls", tuple(self.gold_tool_calls))

    def tool(self, name):
        for tool in self.tools:
            if tool.name == name:
                return tool
        return None

    def to_dict(self):
        data: Dict[str, Any] = {
            'id': self.id,
            'persona': self.persona.to_dict(),
            'tools': [tool.to_dict() for tool in self.tools],
            'messages': [message.to_dict() for message in self.messages],
            'gold_tool_calls': (
                [call.to_dict() for call in self.gold_tool_calls]
                if self.gold_tool_calls is not None else None
            ),
            'reference_response': self.reference_response,
            'knowledge_base': self.knowledge_base.to_dict() if self.knowledge_base else None,
        }
        if self.function_results:
            data['function_results'] = self.function_results
        if self.annotations is not None:
            data['annotations'] = dict(self.annotations)
        return data

    @classmethod
    def from_dict(cls, data):
        gold = data.get('gold_tool_calls')
        kb = data.get('knowledge_base')
        return cls(
            id=data['id'],
            persona=PersonaComponents.from_dict(data.get('persona') or {}),
            tools=tuple(ToolSpec.from_dict(t) for t in data.get('tools') or ()),
            messages=tuple(Message.from_dict(m) for m in data.get('messages') or ()),
            gold_tool_calls=tuple(ToolCall.from_dict(c) for c in gold) if gold is not None else None,
            reference_response=data.get('reference_response'),
            knowledge_base=KnowledgeBase.from_dict(kb) if kb is not None else None,
            function_results=data.get('function_results') or '',
            annotations=data.get('annotations'),
        )


def is_scalar(value):
    if isinstance(value, float):
        return math.isfinite(value)
    return isinstance(value, SCALAR_TYPES)


def is_argument_value(value):
    if isinstance(value, (list, tuple)):
        return all(is_scalar(v) for v in value)
    return is_scalar(value)


def messages_from_dicts(items) -> List[Message]:
    return [Message.from_dict(m) for m in items or ()]


def tools_from_dicts(items) -> List[ToolSpec]:
    return [ToolSpec.from_dict(t) for t in items or ()]

from .core import (
    Episode,
    ItemRecord,
    KnowledgeBase,
    Message,
    ParamKind,
    ParamSchema,
    PersonaComponents,
    Role,
    TokenBudget,
    ToolCall,
    ToolSpec,
)
from .evaluation import EvaluationRun, EpisodeResult

__all__ = [
    'Episode', 'ItemRecord', 'KnowledgeBase', 'Message',
    'ParamKind', 'ParamSchema', 'PersonaComponents', 'Role',
    'TokenBudget', 'ToolCall', 'ToolSpec',
    'EvaluationRun', 'EpisodeResult'
]

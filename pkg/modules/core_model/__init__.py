from .tokens import (
    DEFAULT_COUNTER,
    HeuristicTokenCounter,
    TokenCounter,
    count_context_tokens,
    count_tokens,
    get_token_counter,
    serialize_message,
    serialize_tool,
)
from .dataset import dump_dataset, load_dataset

__all__ = [
    'DEFAULT_COUNTER', 'HeuristicTokenCounter', 'TokenCounter', 'count_context_tokens',
    'count_tokens', 'get_token_counter', 'serialize_message', 'serialize_tool',
    'dump_dataset', 'load_dataset',
]

from .chat_client import ChatCompletionsClient, EndpointConfig
from .judge import (
    JudgeVerdict,
    PairwiseOutcome,
    build_judge_prompt,
    judge_response,
    pairwise_compare,
    parse_verdict,
)

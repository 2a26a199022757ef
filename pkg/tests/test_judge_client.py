import logging
import re
from unittest.mock import MagicMock, patch

import pytest
import requests

from conftest import make_episode
from errors import (
    EndpointError,
    InvalidScoreError,
    JudgeFormatError,
    MissingTagError,
    PairwiseComparisonError,
    ScoreOutOfRangeError,
    VerdictParseError,
)
from modules.judge_client import (
    ChatCompletionsClient,
    EndpointConfig,
    JudgeVerdict,
    build_judge_prompt,
    judge_response,
    pairwise_compare,
    parse_verdict,
)
from modules.judge_client.judge import REASK_MESSAGE

POST = 'modules.judge_client.chat_client.requests.post'
API_KEY = "sk-test-0123456789"


def _config(**overrides):
    values = dict(base_url="http://judge.local/v1", model_name="judge", api_key=API_KEY,
                  max_retries=2, backoff_base=0.0, max_parallel=2)
    values.update(overrides)
    return EndpointConfig(**values)


def _http(status=200, content="<reason>fine</reason><score>4</score>"):
    response = MagicMock()
    response.status_code = status
    response.json.return_value = {"choices": [{"message": {"role": "assistant", "content": content}}]}
    return response


class ScriptedJudge:
    """Scores a candidate by the digit following ``S`` at the start of the NPC response."""

    def __init__(self, replies=None):
        self.replies = list(replies or [])
        self.calls = []

    def complete(self, messages, temperature=0.0):
        self.calls.append((list(messages), temperature))
        if self.replies:
            return self.replies.pop(0)
        score = re.search(r"NPC Response:\nS(\d)", messages[0]['content']).group(1)
        return f"<reason>scripted</reason><score>{score}</score>"


class TestParseVerdict:

    @pytest.mark.parametrize("score", range(6))
    def test_valid_scores(self, score):
        verdict = parse_verdict(f"<reason>Stays in character.</reason>\n<score>{score}</score>")
        assert verdict == JudgeVerdict("Stays in character.", score)

    def test_surrounding_text_and_whitespace(self):
        verdict = parse_verdict("Sure.\n<reason>\n ok \n</reason> then <score> 3 </score> done")
        assert verdict == JudgeVerdict("ok", 3)

    def test_first_tags_win(self):
        assert parse_verdict("<reason>a</reason><score>2</score><reason>b</reason><score>5</score>").score == 2

    @pytest.mark.parametrize("text, error", [
        ("", MissingTagError),
        (None, MissingTagError),
        ("<score>3</score>", MissingTagError),
        ("<reason>ok</reason>", MissingTagError),
        ("<reason>ok<score>3</score>", MissingTagError),
        ("<reason>ok</reason><score>3", MissingTagError),
        ("<Reason>ok</Reason><score>3</score>", MissingTagError),
        ("reason: ok, score: 3", MissingTagError),
        ("<reason>ok</reason><score></score>", InvalidScoreError),
        ("<reason>ok</reason><score>three</score>", InvalidScoreError),
        ("<reason>ok</reason><score>3.5</score>", InvalidScoreError),
        ("<reason>ok</reason><score>4/5</score>", InvalidScoreError),
        ("<reason>ok</reason><score>[0-5]</score>", InvalidScoreError),
        ("<reason>ok</reason><score>3 points</score>", InvalidScoreError),
        ("<reason>ok</reason><score>0x3</score>", InvalidScoreError),
        ("<reason>ok</reason><score>6</score>", ScoreOutOfRangeError),
        ("<reason>ok</reason><score>-1</score>", ScoreOutOfRangeError),
        ("<reason>ok</reason><score>10</score>", ScoreOutOfRangeError),
        ("<reason>ok</reason><score>+7</score>", ScoreOutOfRangeError),
        ("<reason>ok</reason><score>100</score>", ScoreOutOfRangeError),
    ])
    def test_malformed(self, text, error):
        with pytest.raises(error):
            parse_verdict(text)

    def test_errors_share_a_base(self):
        assert issubclass(ScoreOutOfRangeError, VerdictParseError)
        assert issubclass(InvalidScoreError, VerdictParseError)


class TestJudgePrompt:

    def test_sections(self, episode):
        prompt = build_judge_prompt(episode, "Welcome back, friend!")
        assert "NPC Response:\nWelcome back, friend!" in prompt
        assert episode.persona.worldview in prompt
        assert "5 - Excellent; immersive, rich, convincingly in character." in prompt
        assert prompt.rstrip().endswith("<score>[0-5]</score>")
        assert "Reference Response" not in prompt

    def test_reference_only_on_request(self, episode):
        prompt = build_judge_prompt(episode, "Hi", include_reference=True)
        assert f"Reference Response:\n{episode.reference_response}" in prompt


class TestChatCompletionsClient:

    @patch(POST)
    def test_success(self, mock_post):
        mock_post.return_value = _http(content="Hello")
        client = ChatCompletionsClient(_config())
        assert client.complete([{"role": "user", "content": "hi"}]) == "Hello"
        args, kwargs = mock_post.call_args
        assert args[0] == "http://judge.local/v1/chat/completions"
        assert kwargs['json'] == {"model": "judge", "messages": [{"role": "user", "content": "hi"}],
                                  "temperature": 0.0}
        assert kwargs['headers']['Authorization'] == f"Bearer {API_KEY}"
        assert client.retry_count == 0

    @patch(POST)
    def test_rate_limit_is_retried(self, mock_post):
        mock_post.side_effect = [_http(429), _http(content="ok")]
        client = ChatCompletionsClient(_config())
        assert client.complete([]) == "ok"
        assert client.retry_count == 1

    @patch(POST)
    def test_server_errors_exhaust_retries(self, mock_post):
        mock_post.return_value = _http(503)
        client = ChatCompletionsClient(_config(max_retries=2))
        with pytest.raises(EndpointError):
            client.complete([])
        assert mock_post.call_count == 3
        assert client.retry_count == 2

    @patch(POST)
    def test_client_error_is_not_retried(self, mock_post):
        mock_post.return_value = _http(400)
        client = ChatCompletionsClient(_config())
        with pytest.raises(EndpointError):
            client.complete([])
        assert mock_post.call_count == 1

    @pytest.mark.parametrize("failure", [requests.exceptions.ConnectionError("down"),
                                         requests.exceptions.Timeout("slow")])
    def test_transport_failures_are_retried(self, failure):
        with patch(POST) as mock_post:
            mock_post.side_effect = [failure, _http(content="ok")]
            client = ChatCompletionsClient(_config())
            assert client.complete([]) == "ok"
            assert client.retry_count == 1

    @patch(POST)
    def test_bad_payload(self, mock_post):
        response = _http()
        response.json.return_value = {"choices": []}
        mock_post.return_value = response
        with pytest.raises(EndpointError):
            ChatCompletionsClient(_config()).complete([])

    @patch(POST)
    def test_api_key_never_logged(self, mock_post, caplog):
        mock_post.return_value = _http(content=f"echo {API_KEY}")
        caplog.set_level(logging.INFO, logger='modules.judge_client.chat_client')
        ChatCompletionsClient(_config(verbose=True)).complete([{"role": "user", "content": "hi"}])
        assert "Chat completion request" in caplog.text
        assert API_KEY not in caplog.text
        assert "***" in caplog.text

    def test_api_key_not_in_repr(self):
        assert API_KEY not in repr(_config())
        assert 'api_key' not in _config().to_dict()

    def test_config_from_mapping(self):
        cfg = EndpointConfig.from_config({'LLM_BASE_URL': 'http://x', 'LLM_MODEL': 'm', 'LLM_VERBOSE': 'true'})
        assert cfg.completions_url == "http://x/chat/completions"
        assert cfg.verbose is True
        with pytest.raises(ValueError):
            EndpointConfig.from_config({})


class TestJudgeResponse:

    def test_temperature_zero(self, episode):
        judge = ScriptedJudge()
        verdict = judge_response(_config(), episode, "S3 Welcome!", client=judge)
        assert verdict.score == 3
        assert [temperature for _, temperature in judge.calls] == [0.0]

    def test_reask_once(self, episode):
        judge = ScriptedJudge(["I liked it.", "<reason>ok</reason><score>4</score>"])
        assert judge_response(_config(), episode, "Hi", client=judge).score == 4
        messages, _ = judge.calls[1]
        assert messages[-2] == {'role': 'assistant', 'content': "I liked it."}
        assert messages[-1] == {'role': 'user', 'content': REASK_MESSAGE}

    def test_second_failure_is_a_format_error(self, episode):
        judge = ScriptedJudge(["nope", "<reason>x</reason><score>9</score>"])
        with pytest.raises(JudgeFormatError):
            judge_response(_config(), episode, "Hi", client=judge)
        assert len(judge.calls) == 2

    @patch(POST)
    def test_through_http(self, mock_post, episode):
        mock_post.return_value = _http(content="<reason>Good.</reason><score>5</score>")
        assert judge_response(_config(), episode, "Hi").score == 5
        assert mock_post.call_args.kwargs['json']['temperature'] == 0.0


class TestPairwiseCompare:

    def setup_method(self):
        self.episodes = [make_episode(f"ep-{i}") for i in range(4)]

    def test_counts(self):
        a = ["S5 a", "S2 a", "S3 a", "S0 a"]
        b = ["S4 b", "S4 b", "S3 b", "S1 b"]
        outcome = pairwise_compare(_config(), self.episodes, a, b, client=ScriptedJudge())
        assert (outcome.wins_a, outcome.wins_b, outcome.draws) == (1, 2, 1)
        assert outcome.to_dict()['win_rate_a'] == 25.0
        assert outcome.scores[0] == ("ep-0", 5, 4)

    def test_antisymmetric(self):
        a = ["S5 a", "S2 a", "S3 a", "S0 a"]
        b = ["S4 b", "S4 b", "S3 b", "S1 b"]
        forward = pairwise_compare(_config(), self.episodes, a, b, client=ScriptedJudge())
        backward = pairwise_compare(_config(), self.episodes, b, a, client=ScriptedJudge())
        assert (forward.wins_a, forward.wins_b, forward.draws) == \
            (backward.wins_b, backward.wins_a, backward.draws)

    def test_identical_responses_draw(self):
        responses = ["S2 same", "S4 same", "S1 same", "S5 same"]
        outcome = pairwise_compare(_config(), self.episodes, responses, responses, client=ScriptedJudge())
        assert outcome.draws == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pairwise_compare(_config(), self.episodes, ["S1"] * 4, ["S1"] * 3, client=ScriptedJudge())

    def test_judge_failure_names_the_episode(self):
        class Broken:
            def complete(self, messages, temperature=0.0):
                raise EndpointError("down")

        with pytest.raises(PairwiseComparisonError) as info:
            pairwise_compare(_config(), self.episodes, ["S1"] * 4, ["S1"] * 4, client=Broken())
        assert info.value.episode_id == "ep-0"

    def test_empty(self):
        outcome = pairwise_compare(_config(), [], [], [], client=ScriptedJudge())
        assert outcome.total == 0
        assert outcome.to_dict()['draw_rate'] == 0.0

import itertools
import json
import math
import random

import pytest

from errors import RewardError
from models.core import ToolCall
from modules.reward_engine.rewards import (
    RewardWeights,
    combined_reward,
    match_calls,
    roleplay_reward,
    tool_call_f1,
)
from modules.reward_engine.toolcall_parser import (
    MalformedBlock,
    parse_tool_call_block,
    parse_tool_calls,
)

SELL = ToolCall("sell_item", {"item": "healing_potion"})
CHECK = ToolCall("check_items", {"items": ["iron_sword"]})


class TestToolCallParser:

    def test_single_block(self):
        text = 'Sure! <tool_call>{"name": "sell_item", "arguments": {"item": "healing_potion"}}</tool_call>'
        assert parse_tool_calls(text) == ([SELL], 0)

    def test_blocks_keep_order(self):
        text = SELL.to_block() + " and " + CHECK.to_block()
        assert parse_tool_calls(text) == ([SELL, CHECK], 0)

    def test_arguments_as_json_string(self):
        payload = json.dumps({"name": "sell_item", "arguments": json.dumps({"item": "healing_potion"})})
        assert parse_tool_call_block(payload) == SELL

    def test_malformed_blocks_are_counted(self):
        text = (
            "<tool_call>not json</tool_call>"
            '<tool_call>{"arguments": {}}</tool_call>'
            '<tool_call>{"name": "f"}</tool_call>'
            '<tool_call>{"name": "f", "arguments": [1]}</tool_call>'
            '<tool_call>{"name": "f", "arguments": {"x": {"nested": 1}}}</tool_call>'
            + SELL.to_block()
        )
        assert parse_tool_calls(text) == ([SELL], 5)

    def test_unterminated_block(self):
        text = SELL.to_block() + '<tool_call>{"name": "sell_item"'
        assert parse_tool_calls(text) == ([SELL], 1)

    def test_plain_text(self):
        assert parse_tool_calls("Welcome, traveller.") == ([], 0)
        assert parse_tool_calls(None) == ([], 0)

    def test_block_error_type(self):
        with pytest.raises(MalformedBlock):
            parse_tool_call_block('{"name": "", "arguments": {}}')


class TestToolCallF1:

    def test_both_empty(self):
        assert tool_call_f1([], []) == 1.0

    def test_nothing_predicted(self):
        assert tool_call_f1([], [SELL]) == 0.0
        assert tool_call_f1([SELL], []) == 0.0

    def test_perfect(self):
        assert tool_call_f1([CHECK, SELL], [SELL, CHECK]) == 1.0

    def test_half(self):
        other = ToolCall("sell_item", {"item": "leather_boots"})
        assert tool_call_f1([SELL, other], [SELL, CHECK]) == pytest.approx(0.5)

    def test_low_recall(self):
        gold = [SELL, CHECK, ToolCall("a"), ToolCall("b")]
        assert tool_call_f1([SELL], gold) == pytest.approx(0.4)

    def test_each_gold_matches_once(self):
        match = match_calls([SELL, SELL], [SELL])
        assert match.n_correct == 1
        assert match.pairs == ((0, 0),)

    def test_argument_order_does_not_matter(self):
        a = ToolCall("f", {"x": 1, "y": [1, 2]})
        b = ToolCall.from_dict({"name": "f", "arguments": {"y": [1, 2], "x": 1}})
        assert tool_call_f1([a], [b]) == 1.0


def _oracle_f1(pred, gold):
    if not pred and not gold:
        return 1.0
    if not pred or not gold:
        return 0.0
    best = 0
    if len(pred) <= len(gold):
        for chosen in itertools.permutations(range(len(gold)), len(pred)):
            best = max(best, sum(1 for i, j in enumerate(chosen) if pred[i] == gold[j]))
    else:
        for chosen in itertools.permutations(range(len(pred)), len(gold)):
            best = max(best, sum(1 for j, i in enumerate(chosen) if pred[i] == gold[j]))
    precision = best / len(pred)
    recall = best / len(gold)
    return 2 * precision * recall / max(1, precision + recall)


def _random_f1_call(rng):
    names = rng.sample(("a", "b", "c"), rng.randint(0, 3))
    return ToolCall(rng.choice(("f", "g", "h")), {name: rng.choice((0, 1, "x")) for name in names})


def test_f1_matches_brute_force():
    rng = random.Random(11)
    for _ in range(1000):
        pred = [_random_f1_call(rng) for _ in range(rng.randint(0, 6))]
        gold = [_random_f1_call(rng) for _ in range(rng.randint(0, 6))]
        if gold and len(pred) < 6 and rng.random() < 0.5:
            pred += rng.sample(gold, rng.randint(1, min(len(gold), 6 - len(pred))))
        reward = tool_call_f1(pred, gold)
        assert 0.0 <= reward <= 1.0
        assert reward == pytest.approx(_oracle_f1(pred, gold), abs=1e-12)


class TestRoleplayReward:

    @pytest.mark.parametrize("score, expected", [(0, 0.0), (1, 0.2), (4, 0.8), (5, 1.0)])
    def test_scaling(self, score, expected):
        assert roleplay_reward(score) == pytest.approx(expected)

    @pytest.mark.parametrize("score", [-1, 6, 2.5, True, "3", None])
    def test_invalid(self, score):
        with pytest.raises(RewardError):
            roleplay_reward(score)


class TestCombinedReward:

    def test_default_weights(self):
        assert combined_reward(1.0, roleplay_reward(3)) == pytest.approx(0.8)

    def test_custom_weights(self):
        assert combined_reward(0.5, 1.0, RewardWeights(0.2, 0.8)) == pytest.approx(0.9)

    def test_clipped(self):
        assert combined_reward(1.0, 1.0, RewardWeights(1.0, 1.0)) == 1.0

    @pytest.mark.parametrize("value", [math.nan, math.inf, None, True])
    def test_rejects_non_finite(self, value):
        with pytest.raises(RewardError):
            combined_reward(value, 0.5)

    def test_weight_range(self):
        with pytest.raises(ValueError):
            RewardWeights(eta_tool=1.5)

    def test_weights_from_config(self):
        weights = RewardWeights.from_config({'REWARD_ETA_TOOL': '0.3', 'REWARD_ETA_DLG': '0.7'})
        assert weights.to_dict() == {'eta_tool': 0.3, 'eta_dlg': 0.7}

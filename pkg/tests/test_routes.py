import math
from datetime import datetime, timedelta

from conftest import make_knowledge_base, make_persona, make_shop_tools
from extensions import db
from models.evaluation import EpisodeResult, EvaluationRun

SHOP_TAGS = {"functions": {"sell_item": ["disposal"]}, "arguments": {"item": ["item-reference"]}}


def _tools():
    return [tool.to_dict() for tool in make_shop_tools()]


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    assert response.get_json()['status'] == 'healthy'


class TestContextRoutes:

    def test_prune_fits(self, client):
        response = client.post('/api/context/prune', json={
            'messages': [{'role': 'user', 'content': 'I want to sell my sword'}],
            'tools': _tools(),
        })
        assert response.status_code == 200
        data = response.get_json()
        assert [t['name'] for t in data['tools']] == [t['name'] for t in _tools()]
        assert data['report']['floor_reached'] is False

    def test_prune_tight_budget(self, client):
        response = client.post('/api/context/prune', json={
            'messages': [{'role': 'user', 'content': 'I want to sell my sword'}],
            'tools': _tools(),
            'budget': {'input_limit': 1},
        })
        data = response.get_json()
        assert data['report']['floor_reached'] is True
        assert data['report']['removed_tools'] == ['quest_reward', 'check_items', 'search_item']

    def test_prune_requires_messages(self, client):
        assert client.post('/api/context/prune', json={'tools': _tools()}).status_code == 400

    def test_prune_bad_role(self, client):
        response = client.post('/api/context/prune', json={'messages': [{'role': 'narrator', 'content': 'x'}]})
        assert response.status_code == 400

    def test_distill_explicit_level(self, client):
        response = client.post('/api/context/distill', json={'persona': make_persona().to_dict(), 'level': 4})
        data = response.get_json()
        assert data['level'] == 4
        assert make_persona().knowledge not in data['prompt']

    def test_distill_selects_level(self, client):
        response = client.post('/api/context/distill', json={
            'persona': make_persona().to_dict(),
            'messages': [{'role': 'user', 'content': 'Hi'}],
        })
        assert response.get_json()['level'] == 0

    def test_distill_invalid_level(self, client):
        response = client.post('/api/context/distill', json={'persona': {}, 'level': 9})
        assert response.status_code == 400


class TestToolcallRoutes:

    def test_normalize(self, client):
        response = client.post('/api/toolcalls/normalize', json={
            'call': {'name': 'search_item', 'arguments': {'price': 'more than 5'}},
            'tool': make_shop_tools()[2].to_dict(),
        })
        assert response.status_code == 200
        assert response.get_json()['call'] == {
            'name': 'search_item', 'arguments': {'operator': 'more than', 'price': 5}
        }

    def test_normalize_coercion_error(self, client):
        response = client.post('/api/toolcalls/normalize', json={
            'call': {'name': 'search_item', 'arguments': {'price': 'cheap'}},
            'tool': make_shop_tools()[2].to_dict(),
        })
        assert response.status_code == 400
        assert response.get_json()['parameter'] == 'price'

    def test_merge(self, client):
        response = client.post('/api/toolcalls/merge', json={
            'calls': [
                {'name': 'sell_item', 'arguments': {'item': 'iron_sword'}},
                {'name': 'check_items', 'arguments': {'items': ['healing_potion']}},
                {'name': 'check_items', 'arguments': {'items': ['leather_boots']}},
            ],
            'tools': _tools(),
            'knowledge_base': make_knowledge_base().to_dict(),
            'annotations': SHOP_TAGS,
        })
        data = response.get_json()
        assert data['calls'] == [{'name': 'check_items', 'arguments': {'items': ['healing_potion', 'leather_boots']}}]
        assert data['report']['dropped_calls'][0]['reason'] == 'equipped-item conflict'

    def test_merge_with_query_normalizes(self, client):
        response = client.post('/api/toolcalls/merge', json={
            'calls': [{'name': 'search_item', 'arguments': {'price': '40'}}],
            'tools': _tools(),
            'user_query': 'less than 40 gold',
        })
        data = response.get_json()
        assert data['calls'] == [{'name': 'search_item', 'arguments': {'operator': 'less than', 'price': 40}}]
        assert data['report']['coercions'] == 2

    def test_merge_requires_calls(self, client):
        assert client.post('/api/toolcalls/merge', json={}).status_code == 400


class TestRewardRoutes:

    def test_tool_call_from_text(self, client):
        response = client.post('/api/rewards/tool-call', json={
            'prediction_text': '<tool_call>{"name": "f", "arguments": {}}</tool_call><tool_call>bad</tool_call>',
            'gold': [{'name': 'f', 'arguments': {}}, {'name': 'g', 'arguments': {}}],
        })
        data = response.get_json()
        assert data['malformed'] == 1
        assert data['match']['n_correct'] == 1
        assert math.isclose(data['reward'], 2 * 0.5 / 1.5)

    def test_tool_call_structured(self, client):
        response = client.post('/api/rewards/tool-call', json={'predicted': [], 'gold': []})
        assert response.get_json()['reward'] == 1.0

    def test_combined_from_judge_score(self, client):
        response = client.post('/api/rewards/combined', json={'r_tool': 1.0, 'judge_score': 3})
        data = response.get_json()
        assert math.isclose(data['reward'], 0.8)
        assert math.isclose(data['r_dlg'], 0.6)

    def test_combined_bad_score(self, client):
        response = client.post('/api/rewards/combined', json={'r_tool': 1.0, 'judge_score': 9})
        assert response.status_code == 400


class TestGrpoRoutes:

    def test_advantages(self, client):
        response = client.post('/api/grpo/advantages', json={'rewards': [1, 0, 0, 0, 0]})
        values = response.get_json()['advantages']
        assert [round(v, 6) for v in values] == [2.0, -0.5, -0.5, -0.5, -0.5]

    def test_loss(self, client):
        response = client.post('/api/grpo/loss', json={
            'group': {'rewards': [1, 0], 'logp_new': [0, 0], 'logp_old': [0, 0]},
            'config': {'group_size': 2},
            'kl_beta': 0.0,
        })
        data = response.get_json()
        assert response.status_code == 200
        assert abs(data['loss']) < 1e-9
        assert data['diagnostics']['clip_fraction'] == 0.0

    def test_loss_rejects_bad_rewards(self, client):
        response = client.post('/api/grpo/loss', json={
            'group': {'rewards': [2, 0], 'logp_new': [0, 0], 'logp_old': [0, 0]},
            'config': {'group_size': 2},
        })
        assert response.status_code == 400

    def test_kl_beta(self, client):
        response = client.post('/api/grpo/kl-beta', json={'observed_kl': [0.1, 0.1], 'beta': 0.02})
        data = response.get_json()
        assert math.isclose(data['beta'], 0.02)
        assert len(data['history']) == 3


class TestEvaluationRoutes:

    def _store(self, app, task, created_at):
        with app.app_context():
            run = EvaluationRun(task=task, dataset_path='d.jsonl', episode_count=1, created_at=created_at,
                                report={'exit_code': 0})
            run.episodes.append(EpisodeResult(episode_id='ep-1', r_tool=1.0))
            db.session.add(run)
            db.session.commit()
            return run.id

    def test_list_and_filter(self, app, client):
        now = datetime.utcnow()
        old = self._store(app, 1, now - timedelta(days=3))
        new = self._store(app, 3, now)

        runs = client.get('/api/evaluations/runs').get_json()['runs']
        assert [r['id'] for r in runs] == [new, old]

        runs = client.get('/api/evaluations/runs?task=1').get_json()['runs']
        assert [r['id'] for r in runs] == [old]

        since = (now - timedelta(days=1)).isoformat() + 'Z'
        runs = client.get(f'/api/evaluations/runs?since={since}').get_json()['runs']
        assert [r['id'] for r in runs] == [new]

    def test_bad_since(self, client):
        assert client.get('/api/evaluations/runs?since=yesterday').status_code == 400

    def test_get_run(self, app, client):
        run_id = self._store(app, 2, datetime.utcnow())
        data = client.get(f'/api/evaluations/runs/{run_id}').get_json()['run']
        assert data['episodes'][0]['episode_id'] == 'ep-1'
        assert data['report'] == {'exit_code': 0}

    def test_missing_run(self, client):
        assert client.get('/api/evaluations/runs/999').status_code == 404

"""Scriptable stand-in for a chat-completions endpoint.

Script format::

    {
      "default": "text served when no rule matches",
      "rules": [
        {"match": "Dialogue generation", "response": "Welcome, traveller."},
        {"match": ["critic", "Zara"], "responses": ["<reason>ok</reason><score>4</score>"]},
        {"match": "flaky", "responses": [{"status": 503}, "recovered"]}
      ]
    }

A rule matches when every one of its substrings occurs in the concatenated
message contents of the request; the first matching rule wins. A rule's
responses are served in order and the last one repeats. A response is
either a text or an object with optional ``content``, ``status`` and
``delay`` (seconds); a rule-level ``status`` applies to every response of
the rule that does not set its own.
"""
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from flask import Flask, jsonify, request
from werkzeug.serving import make_server

from errors import MockEndpointError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MockResponse:
    content: str = ""
    status: int = 200
    delay: float = 0.0


@dataclass(frozen=True)
class MockRule:
    match: Tuple[str, ...]
    responses: Tuple[MockResponse, ...]

    def matches(self, text):
        return all(fragment in text for fragment in self.match)


@dataclass(frozen=True)
class MockScript:
    default: str = ""
    rules: Tuple[MockRule, ...] = ()

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise MockEndpointError("mock script must be a JSON object")
        rules = []
        for index, rule in enumerate(data.get('rules') or ()):
            try:
                rules.append(_parse_rule(rule))
            except (KeyError, TypeError, ValueError) as e:
                raise MockEndpointError(f"invalid mock rule #{index}: {e}") from e
        return cls(default=str(data.get('default', '')), rules=tuple(rules))


def _parse_response(item, status):
    if isinstance(item, str):
        return MockResponse(content=item, status=status)
    if isinstance(item, dict):
        return MockResponse(
            content=str(item.get('content', '')),
            status=int(item.get('status', status)),
            delay=float(item.get('delay', 0.0)),
        )
    raise TypeError(f"unsupported response {item!r}")


def _parse_rule(rule):
    match = rule['match']
    match = (match,) if isinstance(match, str) else tuple(str(m) for m in match)
    if not match:
        raise ValueError("match must name at least one substring")
    status = int(rule.get('status', 200))
    items = rule['responses'] if 'responses' in rule else [rule['response']]
    if isinstance(items, str):
        items = [items]
    responses = tuple(_parse_response(item, status) for item in items)
    if not responses:
        raise ValueError("a rule needs at least one response")
    return MockRule(match=match, responses=responses)


def load_mock_script(path):
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise MockEndpointError(f"cannot read mock script {path}: {e}") from e
    return MockScript.from_dict(data)


@dataclass
class MockState:
    script: MockScript
    served: List[int] = field(default_factory=list)
    request_log: List[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        self.served = [0] * len(self.script.rules)

    def next_response(self, text):
        """Pick the response for a request and log it."""
        with self.lock:
            for index, rule in enumerate(self.script.rules):
                if rule.matches(text):
                    position = min(self.served[index], len(rule.responses) - 1)
                    self.served[index] += 1
                    response = rule.responses[position]
                    self._log(index, True, response.status, text)
                    return response
            response = MockResponse(content=self.script.default)
            self._log(None, False, response.status, text)
            return response

    def _log(self, rule_index, matched, status, text):
        self.request_log.append({
            'index': len(self.request_log),
            'rule': rule_index,
            'matched': matched,
            'status': status,
            'prompt': text,
        })


def create_mock_app(script):
    app = Flask(__name__)
    state = MockState(script)
    app.extensions['mock_state'] = state

    @app.route('/chat/completions', methods=['POST'])
    @app.route('/v1/chat/completions', methods=['POST'])
    def chat_completions():
        data = request.get_json(silent=True) or {}
        messages = data.get('messages') or []
        text = "\n".join(str(m.get('content') or '') for m in messages if isinstance(m, dict))
        response = state.next_response(text)
        if response.delay:
            time.sleep(response.delay)
        if response.status >= 400:
            return jsonify({'error': {'message': f'mock status {response.status}'}}), response.status
        return jsonify({
            'id': f"mock-{len(state.request_log)}",
            'object': 'chat.completion',
            'model': data.get('model', 'mock'),
            'choices': [{
                'index': 0,
                'message': {'role': 'assistant', 'content': response.content},
                'finish_reason': 'stop'
            }]
        }), 200

    return app


class MockEndpointHandle:
    def __init__(self, server, thread, state):
        self._server = server
        self._thread = thread
        self._state = state
        self.url = f"http://{server.host}:{server.server_port}"

    @property
    def port(self):
        return self._server.server_port

    @property
    def request_log(self):
        with self._state.lock:
            return list(self._state.request_log)

    def wait(self):
        self._thread.join()

    def shutdown(self):
        self._server.shutdown()
        self._thread.join(timeout=5)
        self._server.server_close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


def mock_endpoint_serve(script_path, port=0, host='127.0.0.1', script: Optional[MockScript] = None):
    """Serve a mock script on a background thread; ``port=0`` picks a free port."""
    script = script or load_mock_script(script_path)
    app = create_mock_app(script)
    try:
        server = make_server(host, port, app, threaded=True)
    except (OSError, SystemExit) as e:
        raise MockEndpointError(f"cannot bind mock endpoint on {host}:{port}: {e}") from e
    thread = threading.Thread(target=server.serve_forever, name='mock-endpoint', daemon=True)
    thread.start()
    handle = MockEndpointHandle(server, thread, app.extensions['mock_state'])
    logger.info(f"Mock chat-completions endpoint listening on {handle.url}")
    return handle

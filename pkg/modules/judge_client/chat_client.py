"""Minimal chat-completions transport.

``POST {base_url}/chat/completions`` with ``{model, messages, temperature}``
and a Bearer key. Connection errors, timeouts, HTTP 429 and 5xx are retried
with exponential backoff; anything else fails at once.
"""
import json
import logging
import os
import threading
from dataclasses import dataclass, field

import requests
from tenacity import Retrying, retry_if_exception, stop_after_attempt, wait_exponential

from errors import EndpointError

logger = logging.getLogger(__name__)

REDACTED = "***"


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key: str = field(default="", repr=False)
    max_parallel: int = 4
    timeout: float = 30.0
    max_retries: int = 3
    verbose: bool = False
    backoff_base: float = 0.5
    backoff_max: float = 8.0

    def __post_init__(self):
        if not self.base_url:
            raise ValueError("base_url is required")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def completions_url(self):
        return f"{self.base_url.rstrip('/')}/chat/completions"

    @classmethod
    def from_config(cls, config):
        return cls(
            base_url=config.get('LLM_BASE_URL') or '',
            model_name=config.get('LLM_MODEL') or 'judge',
            api_key=config.get('LLM_API_KEY') or '',
            max_parallel=int(config.get('LLM_MAX_PARALLEL', 4)),
            timeout=float(config.get('LLM_TIMEOUT', 30)),
            max_retries=int(config.get('LLM_MAX_RETRIES', 3)),
            verbose=_truthy(config.get('LLM_VERBOSE')),
            backoff_base=float(config.get('LLM_BACKOFF_BASE', 0.5)),
        )

    @classmethod
    def from_env(cls):
        return cls.from_config(os.environ)

    def to_dict(self):
        return {
            'base_url': self.base_url,
            'model_name': self.model_name,
            'max_parallel': self.max_parallel,
            'timeout': self.timeout,
            'max_retries': self.max_retries,
        }


def _truthy(value):
    if isinstance(value, bool):
        return value
    return str(value or '').strip().lower() in ('1', 'true', 'yes', 'on')


class TransientStatusError(Exception):
    def __init__(self, status_code):
        super().__init__(f"HTTP {status_code}")
        self.status_code = status_code


def is_transient(exc):
    return isinstance(exc, (requests.exceptions.ConnectionError,
                            requests.exceptions.Timeout,
                            TransientStatusError))


class ChatCompletionsClient:
    """Thread-safe client; ``retry_count`` totals retries over its lifetime."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self.retry_count = 0
        self._lock = threading.Lock()

    def _redact(self, text):
        if self.config.api_key:
            return text.replace(self.config.api_key, REDACTED)
        return text

    def _record_retry(self, retry_state):
        with self._lock:
            self.retry_count += 1
        exc = retry_state.outcome.exception() if retry_state.outcome else None
        logger.warning(f"Retrying chat completion (attempt {retry_state.attempt_number}): {exc}")

    def _post(self, payload):
        headers = {'Content-Type': 'application/json'}
        if self.config.api_key:
            headers['Authorization'] = f"Bearer {self.config.api_key}"

        response = requests.post(
            self.config.completions_url, json=payload, headers=headers, timeout=self.config.timeout
        )
        status = response.status_code
        if status == 429 or status >= 500:
            raise TransientStatusError(status)
        if status >= 400:
            raise EndpointError(f"Endpoint returned HTTP {status}")

        try:
            data = response.json()
            content = data['choices'][0]['message']['content']
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise EndpointError(f"Unexpected chat completion payload: {e}") from e
        if self.config.verbose:
            logger.info(self._redact(f"Chat completion response: {json.dumps(data, ensure_ascii=False)}"))
        return content or ""

    def complete(self, messages, temperature=0.0):
        payload = {
            'model': self.config.model_name,
            'messages': list(messages),
            'temperature': temperature,
        }
        if self.config.verbose:
            logger.info(self._redact(
                f"Chat completion request to {self.config.completions_url} "
                f"(Authorization: Bearer {self.config.api_key}): "
                f"{json.dumps(payload, ensure_ascii=False)}"
            ))

        retrying = Retrying(
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=wait_exponential(multiplier=self.config.backoff_base, max=self.config.backoff_max),
            retry=retry_if_exception(is_transient),
            before_sleep=self._record_retry,
            reraise=True,
        )
        try:
            return retrying(self._post, payload)
        except EndpointError:
            raise
        except (TransientStatusError, requests.exceptions.RequestException) as e:
            raise EndpointError(
                f"Chat completion failed after {self.config.max_retries + 1} attempts: {e}"
            ) from e

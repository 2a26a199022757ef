"""Offline evaluation of Task 1 (tool calls), Task 2 (dialogue) and Task 3 (both).

Each episode goes through the same context engineering as the live agent:
toolset pruning or persona distillation, the prompt template, one
chat-completions call, then tool-call post-processing and the reward stack.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import List, Optional

from errors import ContextEngineError, NoUserMessageError, RunConfigError
from extensions import db
from models.core import TokenBudget
from models.evaluation import EpisodeResult, EvaluationRun
from modules.context_pruning.persona_distiller import (
    distill_components,
    select_reduction_level,
    task2_reserved_tokens,
)
from modules.context_pruning.prompts import (
    render_task1_prompt,
    render_task2_prompt,
    task1_reserved_tokens,
)
from modules.context_pruning.toolset_pruner import extract_last_user_query, prune_toolset
from modules.core_model import HeuristicTokenCounter, count_tokens, load_dataset
from modules.grpo_math.grpo import GrpoConfig
from modules.judge_client import ChatCompletionsClient, EndpointConfig, judge_response
from modules.reward_engine.rewards import (
    RewardWeights,
    combined_reward,
    roleplay_reward,
    tool_call_f1,
)
from modules.reward_engine.toolcall_parser import parse_tool_calls
from modules.toolcall_postprocess import (
    EMPTY_ANNOTATIONS,
    ToolAnnotations,
    canonicalize_reference_calls,
    load_annotations,
    merge_annotations,
    postprocess_calls,
)

from .mock_endpoint import mock_endpoint_serve

logger = logging.getLogger(__name__)

TASKS = (1, 2, 3)
EXIT_EPISODE_FAILURES = 2
MOCK_BASE_URL = "mock://script"


def _truthy(value):
    if isinstance(value, bool):
        return value
    return str(value or '').strip().lower() in ('1', 'true', 'yes', 'on')


@dataclass(frozen=True)
class RunConfig:
    task: int
    dataset_path: str
    output_path: Optional[str] = None
    budget: TokenBudget = field(default_factory=TokenBudget)
    weights: RewardWeights = field(default_factory=RewardWeights)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    endpoint: Optional[EndpointConfig] = None
    mock_script: Optional[str] = None
    annotations_path: Optional[str] = None
    record: bool = True
    include_reference: bool = True
    tokens_per_message: int = 4

    def __post_init__(self):
        if self.task not in TASKS:
            raise RunConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.dataset_path:
            raise RunConfigError("a dataset path is required")
        if self.endpoint is None and not self.mock_script:
            raise RunConfigError("an endpoint base URL or a mock script is required")

    @property
    def max_parallel(self):
        return self.endpoint.max_parallel if self.endpoint else 1

    @classmethod
    def from_config(cls, config, **overrides):
        """Build a run configuration from app config, letting non-None overrides win.

        Recognised overrides: task, dataset_path, output_path, base_url, model,
        budget_in, budget_out, eta_tool, eta_dlg, mock_script, parallel,
        verbose, annotations_path, record, include_reference.
        """
        def pick(name, key, default=None):
            value = overrides.get(name)
            if value is not None:
                return value
            return config.get(key, default) if key else default

        try:
            budget = TokenBudget(
                input_limit=int(pick('budget_in', 'TOKEN_BUDGET_INPUT', 2000)),
                output_limit=int(pick('budget_out', 'TOKEN_BUDGET_OUTPUT', 200)),
            )
            weights = RewardWeights(
                eta_tool=float(pick('eta_tool', 'REWARD_ETA_TOOL', 0.5)),
                eta_dlg=float(pick('eta_dlg', 'REWARD_ETA_DLG', 0.5)),
            )
            grpo = GrpoConfig.from_config(config)
            mock_script = pick('mock_script', None)
            base_url = pick('base_url', 'LLM_BASE_URL') or (MOCK_BASE_URL if mock_script else None)
            endpoint = None
            if base_url:
                endpoint = replace(
                    EndpointConfig.from_config({**config, 'LLM_BASE_URL': base_url}),
                    model_name=pick('model', 'LLM_MODEL') or 'npc-agent',
                    max_parallel=int(pick('parallel', 'LLM_MAX_PARALLEL', 4)),
                    verbose=_truthy(pick('verbose', 'LLM_VERBOSE')),
                )
        except (TypeError, ValueError) as e:
            raise RunConfigError(f"invalid run configuration: {e}") from e

        record = overrides.get('record')
        include_reference = pick('include_reference', 'JUDGE_INCLUDE_REFERENCE', True)
        return cls(
            task=int(overrides.get('task') or 0),
            dataset_path=overrides.get('dataset_path') or '',
            output_path=overrides.get('output_path'),
            budget=budget,
            weights=weights,
            grpo=grpo,
            endpoint=endpoint,
            mock_script=mock_script,
            annotations_path=pick('annotations_path', 'TOOL_ANNOTATIONS_PATH'),
            record=True if record is None else bool(record),
            include_reference=_truthy(include_reference),
            tokens_per_message=int(config.get('TOKENS_PER_MESSAGE', 4)),
        )

    @property
    def counter(self):
        return HeuristicTokenCounter(per_message_overhead=self.tokens_per_message)

    def to_dict(self):
        return {
            'task': self.task,
            'dataset_path': self.dataset_path,
            'budget': self.budget.to_dict(),
            'weights': self.weights.to_dict(),
            'grpo': self.grpo.to_dict(),
            'endpoint': self.endpoint.to_dict() if self.endpoint else None,
            'mock_script': self.mock_script,
            'annotations_path': self.annotations_path,
            'include_reference': self.include_reference,
            'tokens_per_message': self.tokens_per_message,
        }


@dataclass(frozen=True)
class Exchange:
    prompt: str
    response: str
    prompt_tokens: int
    output_tokens: int

    def to_dict(self):
        return {
            'prompt': self.prompt,
            'response': self.response,
            'prompt_tokens': self.prompt_tokens,
            'output_tokens': self.output_tokens,
        }


@dataclass
class EpisodeReport:
    episode_id: str
    task: int
    r_tool: Optional[float] = None
    r_dlg: Optional[float] = None
    r_combined: Optional[float] = None
    prune_report: Optional[object] = None
    reduction_level: Optional[int] = None
    dialogue_floor_reached: bool = False
    postprocess_report: Optional[object] = None
    malformed_blocks: int = 0
    predicted_calls: List[object] = field(default_factory=list)
    judge_verdict: Optional[object] = None
    transcript: List[Exchange] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def floor_reached(self):
        """The tool prompt hit the pruning floor or the dialogue prompt stayed over budget."""
        return bool(self.prune_report and self.prune_report.floor_reached) or self.dialogue_floor_reached

    def to_dict(self):
        return {
            'episode_id': self.episode_id,
            'task': self.task,
            'r_tool': self.r_tool,
            'r_dlg': self.r_dlg,
            'r_combined': self.r_combined,
            'prune_report': self.prune_report.to_dict() if self.prune_report else None,
            'reduction_level': self.reduction_level,
            'dialogue_floor_reached': self.dialogue_floor_reached,
            'postprocess_report': self.postprocess_report.to_dict() if self.postprocess_report else None,
            'malformed_blocks': self.malformed_blocks,
            'predicted_calls': [call.to_dict() for call in self.predicted_calls],
            'judge_verdict': self.judge_verdict.to_dict() if self.judge_verdict else None,
            'transcript': [exchange.to_dict() for exchange in self.transcript],
            'error': self.error,
        }


def _exchange(client, prompt, counter):
    response = client.complete([{'role': 'user', 'content': prompt}], temperature=0.0)
    return Exchange(
        prompt=prompt,
        response=response,
        prompt_tokens=count_tokens(prompt, counter),
        output_tokens=count_tokens(response, counter),
    )


def _episode_annotations(episode, base):
    if episode.annotations is None:
        return base
    return merge_annotations(base, ToolAnnotations.from_dict(episode.annotations))


def _run_tool_turn(episode, run_config, client, report, annotations):
    counter = run_config.counter
    reserved = task1_reserved_tokens(episode, counter)
    pruned, report.prune_report = prune_toolset(
        episode.messages, episode.tools, run_config.budget, reserved, counter
    )
    exchange = _exchange(client, render_task1_prompt(episode, pruned), counter)
    report.transcript.append(exchange)

    calls, report.malformed_blocks = parse_tool_calls(exchange.response)
    try:
        user_query = extract_last_user_query(episode.messages)
    except NoUserMessageError:
        user_query = ""
    report.predicted_calls, report.postprocess_report = postprocess_calls(
        calls, episode.tools, user_query, episode.knowledge_base, annotations
    )

    gold = canonicalize_reference_calls(episode.gold_tool_calls, episode.tools, user_query, annotations)
    report.r_tool = tool_call_f1(report.predicted_calls, gold)


def _run_dialogue_turn(episode, run_config, client, report):
    counter = run_config.counter
    reserved = task2_reserved_tokens(episode.function_results, counter)
    report.reduction_level = select_reduction_level(
        episode.persona, episode.messages, (), run_config.budget, reserved, counter
    )
    distilled = distill_components(episode.persona, report.reduction_level)
    prompt = render_task2_prompt(episode, distilled, episode.function_results)
    exchange = _exchange(client, prompt, counter)
    report.transcript.append(exchange)
    if exchange.prompt_tokens > run_config.budget.input_limit:
        report.dialogue_floor_reached = True
        logger.warning(
            f"Episode '{episode.id}': Task 2 prompt is {exchange.prompt_tokens} tokens "
            f"at reduction level {report.reduction_level}, over the {run_config.budget.input_limit} limit"
        )

    report.judge_verdict = judge_response(
        run_config.endpoint, episode, exchange.response, client, run_config.include_reference
    )
    report.r_dlg = roleplay_reward(report.judge_verdict.score)


def run_episode(episode, run_config, client, annotations=None):
    """Evaluate one episode. Failures end up in ``report.error``, never raised."""
    report = EpisodeReport(episode_id=episode.id, task=run_config.task)
    annotations = _episode_annotations(episode, annotations or EMPTY_ANNOTATIONS)
    try:
        if run_config.task in (1, 3):
            if episode.gold_tool_calls is None:
                raise RunConfigError(f"task {run_config.task} requires gold_tool_calls")
            _run_tool_turn(episode, run_config, client, report, annotations)
        if run_config.task in (2, 3):
            _run_dialogue_turn(episode, run_config, client, report)
        if run_config.task == 3:
            report.r_combined = combined_reward(report.r_tool, report.r_dlg, run_config.weights)
    except ContextEngineError as e:
        report.error = f"{type(e).__name__}: {e}"
        logger.error(f"Episode '{episode.id}' failed: {report.error}")
    except Exception as e:
        report.error = f"{type(e).__name__}: {e}"
        logger.exception(f"Episode '{episode.id}' failed unexpectedly")
    return report


def _mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def aggregate(reports):
    return {
        'episodes': len(reports),
        'errored': sum(1 for r in reports if r.error),
        'mean_r_tool': _mean(r.r_tool for r in reports),
        'mean_r_dlg': _mean(r.r_dlg for r in reports),
        'mean_r_combined': _mean(r.r_combined for r in reports),
        'malformed_blocks': sum(r.malformed_blocks for r in reports),
        'prune_floor_count': sum(1 for r in reports if r.floor_reached),
        'mean_reduction_level': _mean(r.reduction_level for r in reports),
    }


def run_suite(run_config, client=None):
    """Run every episode of the dataset and build the JSON report.

    Returns ``(report, exit_code)``; the exit code is 2 when any episode
    errored. Dataset and annotation problems raise before any episode runs.
    """
    episodes = load_dataset(run_config.dataset_path)
    annotations = load_annotations(run_config.annotations_path) if run_config.annotations_path else None

    handle = None
    try:
        if client is None:
            endpoint = run_config.endpoint
            if run_config.mock_script:
                handle = mock_endpoint_serve(run_config.mock_script, 0)
                endpoint = replace(endpoint, base_url=handle.url)
            client = ChatCompletionsClient(endpoint)

        with ThreadPoolExecutor(max_workers=run_config.max_parallel) as pool:
            reports = list(pool.map(
                lambda episode: run_episode(episode, run_config, client, annotations), episodes
            ))
    finally:
        if handle is not None:
            handle.shutdown()

    reports.sort(key=lambda r: r.episode_id)
    aggregates = aggregate(reports)
    exit_code = EXIT_EPISODE_FAILURES if aggregates['errored'] else 0
    report = {
        'generated_at': datetime.utcnow().isoformat() + 'Z',
        'config': run_config.to_dict(),
        'episodes': [r.to_dict() for r in reports],
        'aggregates': aggregates,
        'exit_code': exit_code,
    }

    if run_config.output_path:
        with open(run_config.output_path, 'w', encoding='utf-8') as handle_out:
            json.dump(report, handle_out, sort_keys=True, indent=2, ensure_ascii=False)
            handle_out.write('\n')
    logger.info(
        f"Evaluated {aggregates['episodes']} episodes for task {run_config.task}, "
        f"{aggregates['errored']} errored"
    )
    return report, exit_code


def record_run(report, run_config):
    aggregates = report['aggregates']
    run = EvaluationRun(
        task=run_config.task,
        dataset_path=run_config.dataset_path,
        output_path=run_config.output_path,
        model_name=run_config.endpoint.model_name if run_config.endpoint else None,
        episode_count=aggregates['episodes'],
        errored_count=aggregates['errored'],
        mean_r_tool=aggregates['mean_r_tool'],
        mean_r_dlg=aggregates['mean_r_dlg'],
        mean_r_combined=aggregates['mean_r_combined'],
        malformed_blocks=aggregates['malformed_blocks'],
        prune_floor_count=aggregates['prune_floor_count'],
        exit_code=report['exit_code'],
        report=report,
    )
    for episode in report['episodes']:
        verdict = episode['judge_verdict']
        prune = episode['prune_report']
        run.episodes.append(EpisodeResult(
            episode_id=episode['episode_id'],
            r_tool=episode['r_tool'],
            r_dlg=episode['r_dlg'],
            r_combined=episode['r_combined'],
            judge_score=verdict['score'] if verdict else None,
            floor_reached=bool(prune and prune['floor_reached']) or episode['dialogue_floor_reached'],
            reduction_level=episode['reduction_level'],
            malformed_blocks=episode['malformed_blocks'],
            error=episode['error'],
        ))
    db.session.add(run)
    db.session.commit()
    return run

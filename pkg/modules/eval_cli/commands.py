import json
from dataclasses import replace

import click
from flask import current_app
from flask.cli import AppGroup

from errors import ContextEngineError, RunConfigError
from modules.core_model import load_dataset
from modules.judge_client import ChatCompletionsClient, pairwise_compare

from .mock_endpoint import mock_endpoint_serve
from .pipeline import RunConfig, record_run, run_suite

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1

eval_cli = AppGroup('eval', help='Offline evaluation of NPC agents.')


@eval_cli.command('run')
@click.option('--task', type=click.IntRange(1, 3), required=True, help='1 tool calls, 2 dialogue, 3 both.')
@click.option('--dataset', 'dataset_path', type=click.Path(), required=True)
@click.option('--out', 'output_path', type=click.Path(), default=None)
@click.option('--base-url', default=None)
@click.option('--model', default=None)
@click.option('--budget-in', type=int, default=None)
@click.option('--budget-out', type=int, default=None)
@click.option('--eta-tool', type=float, default=None)
@click.option('--eta-dlg', type=float, default=None)
@click.option('--mock', 'mock_script', type=click.Path(), default=None, help='Serve this mock script and evaluate against it.')
@click.option('--parallel', type=int, default=None)
@click.option('--verbose', is_flag=True, default=False)
@click.option('--annotations', 'annotations_path', type=click.Path(), default=None)
@click.option('--no-record', is_flag=True, default=False, help='Do not store the run in the database.')
@click.pass_context
def run_command(ctx, no_record, **options):
    """Evaluate a dataset and write the JSON report."""
    options['verbose'] = options['verbose'] or None
    try:
        run_config = RunConfig.from_config(current_app.config, record=not no_record, **options)
        report, exit_code = run_suite(run_config)
    except (ContextEngineError, OSError) as e:
        current_app.logger.error(f"Evaluation run error: {str(e)}")
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_CONFIG_ERROR)

    if run_config.record:
        try:
            run = record_run(report, run_config)
            click.echo(f"Recorded evaluation run {run.id}")
        except Exception as e:
            current_app.logger.error(f"Record evaluation run error: {str(e)}")

    click.echo(json.dumps(report['aggregates'], sort_keys=True, indent=2))
    ctx.exit(exit_code)


@eval_cli.command('mock-serve')
@click.option('--script', 'script_path', type=click.Path(), required=True)
@click.option('--port', type=int, default=8000)
@click.option('--host', default='127.0.0.1')
@click.pass_context
def mock_serve_command(ctx, script_path, port, host):
    """Run the mock chat-completions endpoint in the foreground."""
    try:
        handle = mock_endpoint_serve(script_path, port, host)
    except (ContextEngineError, OSError) as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_CONFIG_ERROR)

    click.echo(f"Serving {script_path} on {handle.url}")
    try:
        handle.wait()
    except KeyboardInterrupt:
        pass
    finally:
        handle.shutdown()


def load_responses(path):
    """Read ``{"id": ..., "response": ...}`` lines into a dict keyed by episode id."""
    responses = {}
    with open(path, encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                responses[data['id']] = data['response']
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise RunConfigError(f"{path} line {line_number}: {e}") from e
    return responses


@eval_cli.command('judge-pairwise')
@click.option('--dataset', 'dataset_path', type=click.Path(), required=True)
@click.option('--a', 'responses_a_path', type=click.Path(), required=True)
@click.option('--b', 'responses_b_path', type=click.Path(), required=True)
@click.option('--base-url', default=None)
@click.option('--model', default=None)
@click.option('--mock', 'mock_script', type=click.Path(), default=None)
@click.option('--parallel', type=int, default=None)
@click.option('--reference/--no-reference', 'include_reference', default=None)
@click.pass_context
def judge_pairwise_command(ctx, dataset_path, responses_a_path, responses_b_path,
                           base_url, model, mock_script, parallel, include_reference):
    """Compare two sets of NPC responses with the rubric judge."""
    handle = None
    try:
        run_config = RunConfig.from_config(
            current_app.config, task=2, dataset_path=dataset_path, base_url=base_url,
            model=model, mock_script=mock_script, parallel=parallel,
            include_reference=include_reference,
        )
        episodes = load_dataset(dataset_path)
        responses_a = load_responses(responses_a_path)
        responses_b = load_responses(responses_b_path)
        missing = [e.id for e in episodes if e.id not in responses_a or e.id not in responses_b]
        if missing:
            raise RunConfigError(f"missing responses for episodes: {', '.join(missing)}")

        endpoint = run_config.endpoint
        if mock_script:
            handle = mock_endpoint_serve(mock_script, 0)
            endpoint = replace(endpoint, base_url=handle.url)
        outcome = pairwise_compare(
            endpoint, episodes,
            [responses_a[e.id] for e in episodes],
            [responses_b[e.id] for e in episodes],
            client=ChatCompletionsClient(endpoint),
            include_reference=run_config.include_reference,
        )
    except (ContextEngineError, OSError) as e:
        current_app.logger.error(f"Pairwise judge error: {str(e)}")
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_CONFIG_ERROR)
    finally:
        if handle is not None:
            handle.shutdown()

    summary = outcome.to_dict()
    click.echo(
        f"A wins {summary['wins_a']} ({summary['win_rate_a']}%), "
        f"B wins {summary['wins_b']} ({summary['win_rate_b']}%), "
        f"draws {summary['draws']} ({summary['draw_rate']}%)"
    )
    ctx.exit(EXIT_OK)

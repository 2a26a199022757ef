from flask import request, jsonify, current_app
from models.core import PersonaComponents, TokenBudget, messages_from_dicts, tools_from_dicts
from modules.core_model import get_token_counter
from . import context_bp
from .toolset_pruner import prune_toolset
from .persona_distiller import distill_persona, select_reduction_level


def _budget_from(data):
    defaults = TokenBudget.from_config(current_app.config)
    budget = data.get('budget') or {}
    return TokenBudget(
        input_limit=int(budget.get('input_limit', defaults.input_limit)),
        output_limit=int(budget.get('output_limit', defaults.output_limit)),
    )


@context_bp.route('/prune', methods=['POST'])
def prune():
    try:
        data = request.get_json() or {}

        if not data.get('messages'):
            return jsonify({'error': 'messages is required'}), 400

        try:
            messages = messages_from_dicts(data['messages'])
            tools = tools_from_dicts(data.get('tools'))
            budget = _budget_from(data)
        except (KeyError, TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        pruned, report = prune_toolset(
            messages, tools, budget, counter=get_token_counter(current_app.config)
        )
        return jsonify({
            'tools': [tool.to_dict() for tool in pruned],
            'report': report.to_dict()
        }), 200

    except Exception as e:
        current_app.logger.error(f"Prune toolset error: {str(e)}")
        return jsonify({'error': 'Failed to prune toolset'}), 500


@context_bp.route('/distill', methods=['POST'])
def distill():
    try:
        data = request.get_json() or {}

        if 'persona' not in data:
            return jsonify({'error': 'persona is required'}), 400

        try:
            components = PersonaComponents.from_dict(data['persona'])
            level = data.get('level')
            if level is None:
                level = select_reduction_level(
                    components,
                    messages_from_dicts(data.get('messages')),
                    tools_from_dicts(data.get('tools')),
                    _budget_from(data),
                    counter=get_token_counter(current_app.config),
                )
            prompt = distill_persona(components, level)
        except (KeyError, TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        return jsonify({'level': level, 'prompt': prompt}), 200

    except Exception as e:
        current_app.logger.error(f"Distill persona error: {str(e)}")
        return jsonify({'error': 'Failed to distill persona'}), 500

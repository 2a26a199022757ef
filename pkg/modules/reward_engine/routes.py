from flask import request, jsonify, current_app
from errors import RewardError
from models.core import ToolCall
from . import rewards_bp
from .rewards import RewardWeights, combined_reward, f1_from_match, match_calls, roleplay_reward
from .toolcall_parser import parse_tool_calls


def _weights_from(data):
    defaults = RewardWeights.from_config(current_app.config)
    weights = data.get('weights') or {}
    return RewardWeights(
        eta_tool=float(weights.get('eta_tool', defaults.eta_tool)),
        eta_dlg=float(weights.get('eta_dlg', defaults.eta_dlg)),
    )


@rewards_bp.route('/tool-call', methods=['POST'])
def tool_call_reward():
    try:
        data = request.get_json() or {}

        if 'gold' not in data:
            return jsonify({'error': 'gold is required'}), 400
        if 'prediction_text' not in data and 'predicted' not in data:
            return jsonify({'error': 'prediction_text or predicted is required'}), 400

        try:
            gold = [ToolCall.from_dict(c) for c in data['gold']]
            if 'prediction_text' in data:
                predicted, malformed = parse_tool_calls(data['prediction_text'])
            else:
                predicted, malformed = [ToolCall.from_dict(c) for c in data['predicted']], 0
        except (KeyError, TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        match = match_calls(predicted, gold)
        return jsonify({
            'reward': f1_from_match(match),
            'match': match.to_dict(),
            'malformed': malformed
        }), 200

    except Exception as e:
        current_app.logger.error(f"Tool call reward error: {str(e)}")
        return jsonify({'error': 'Failed to compute tool call reward'}), 500


@rewards_bp.route('/combined', methods=['POST'])
def combined():
    try:
        data = request.get_json() or {}

        if 'r_tool' not in data:
            return jsonify({'error': 'r_tool is required'}), 400
        if 'r_dlg' not in data and 'judge_score' not in data:
            return jsonify({'error': 'r_dlg or judge_score is required'}), 400

        try:
            weights = _weights_from(data)
            r_dlg = data['r_dlg'] if 'r_dlg' in data else roleplay_reward(data['judge_score'])
            reward = combined_reward(data['r_tool'], r_dlg, weights)
        except RewardError as e:
            return jsonify({'error': str(e)}), 400
        except (TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        return jsonify({'reward': reward, 'r_dlg': r_dlg, 'weights': weights.to_dict()}), 200

    except Exception as e:
        current_app.logger.error(f"Combined reward error: {str(e)}")
        return jsonify({'error': 'Failed to compute combined reward'}), 500

from flask import request, jsonify, current_app
from errors import GrpoInputError
from . import grpo_bp
from .grpo import AdaptiveKLController, GrpoConfig, RolloutGroup, group_advantages, grpo_loss


def _config_from(data):
    defaults = GrpoConfig.from_config(current_app.config).to_dict()
    defaults.update(data.get('config') or {})
    return GrpoConfig(**defaults)


@grpo_bp.route('/advantages', methods=['POST'])
def advantages():
    try:
        data = request.get_json() or {}

        if 'rewards' not in data:
            return jsonify({'error': 'rewards is required'}), 400

        try:
            eps = float(data.get('advantage_eps', _config_from(data).advantage_eps))
            values = group_advantages(data['rewards'], eps)
        except GrpoInputError as e:
            return jsonify({'error': str(e)}), 400
        except (TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        return jsonify({'advantages': [float(v) for v in values]}), 200

    except Exception as e:
        current_app.logger.error(f"GRPO advantages error: {str(e)}")
        return jsonify({'error': 'Failed to compute advantages'}), 500


@grpo_bp.route('/loss', methods=['POST'])
def loss():
    try:
        data = request.get_json() or {}

        if 'group' not in data:
            return jsonify({'error': 'group is required'}), 400

        try:
            cfg = _config_from(data)
            group = RolloutGroup.from_dict(data['group'])
            kl_beta = float(data.get('kl_beta', cfg.kl_beta_init))
            value, diagnostics = grpo_loss(group, cfg, kl_beta)
        except GrpoInputError as e:
            return jsonify({'error': str(e)}), 400
        except (KeyError, TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        return jsonify({'loss': value, 'diagnostics': diagnostics.to_dict()}), 200

    except Exception as e:
        current_app.logger.error(f"GRPO loss error: {str(e)}")
        return jsonify({'error': 'Failed to compute loss'}), 500


@grpo_bp.route('/kl-beta', methods=['POST'])
def kl_beta():
    try:
        data = request.get_json() or {}

        if 'observed_kl' not in data:
            return jsonify({'error': 'observed_kl is required'}), 400

        try:
            cfg = _config_from(data)
            beta = data.get('beta')
            controller = AdaptiveKLController(cfg, float(beta) if beta is not None else None)
            observed = data['observed_kl']
            for value in observed if isinstance(observed, list) else [observed]:
                controller.update(float(value))
        except GrpoInputError as e:
            return jsonify({'error': str(e)}), 400
        except (TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        return jsonify({'beta': controller.value, 'history': controller.history}), 200

    except Exception as e:
        current_app.logger.error(f"KL beta update error: {str(e)}")
        return jsonify({'error': 'Failed to update KL coefficient'}), 500

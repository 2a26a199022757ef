from flask import Flask, jsonify
from dotenv import load_dotenv
import logging
from datetime import datetime
import os

load_dotenv()

from config import Config
from errors import ContextEngineError
from extensions import db


def create_app(config_class=Config):
    app = Flask(__name__)
    app.config.from_object(config_class)

    db.init_app(app)

    # Configure logging
    if not app.debug:
        logging.basicConfig(level=logging.INFO)

    from modules.context_pruning import context_bp
    from modules.toolcall_postprocess import toolcalls_bp
    from modules.reward_engine import rewards_bp
    from modules.grpo_math import grpo_bp
    from modules.eval_cli import evaluations_bp, eval_cli

    app.register_blueprint(context_bp, url_prefix='/api/context')
    app.register_blueprint(toolcalls_bp, url_prefix='/api/toolcalls')
    app.register_blueprint(rewards_bp, url_prefix='/api/rewards')
    app.register_blueprint(grpo_bp, url_prefix='/api/grpo')
    app.register_blueprint(evaluations_bp, url_prefix='/api/evaluations')
    app.cli.add_command(eval_cli)

    @app.errorhandler(ContextEngineError)
    def handle_engine_error(e):
        app.logger.error(f"{type(e).__name__}: {str(e)}")
        return jsonify({'error': str(e), 'type': type(e).__name__}), 400

    # Health check endpoint
    @app.route('/api/health')
    def health_check():
        return {
            'status': 'healthy',
            'timestamp': datetime.utcnow().isoformat(),
            'version': '1.0.0'
        }

    with app.app_context():
        import models  # noqa: F401  registers the tables
        db.create_all()

    return app


# Instance used by Gunicorn and the flask CLI
app = create_app()

if __name__ == '__main__':
    app.run(host='0.0.0.0', port=int(os.environ.get('PORT', 5000)), debug=False)

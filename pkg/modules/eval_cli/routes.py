from flask import request, jsonify, current_app
from datetime import timezone
from dateutil.parser import isoparse
from extensions import db
from models.evaluation import EvaluationRun
from . import evaluations_bp


@evaluations_bp.route('/runs', methods=['GET'])
def list_runs():
    try:
        task = request.args.get('task', type=int)
        since = request.args.get('since')
        limit = request.args.get('limit', default=50, type=int)

        query = EvaluationRun.query
        if task:
            query = query.filter_by(task=task)
        if since:
            try:
                since_dt = isoparse(since)
                # Stored timestamps are naive UTC
                if since_dt.tzinfo is not None:
                    since_dt = since_dt.astimezone(timezone.utc).replace(tzinfo=None)
            except (ValueError, OverflowError):
                return jsonify({'error': 'Invalid since format'}), 400
            query = query.filter(EvaluationRun.created_at >= since_dt)

        runs = query.order_by(EvaluationRun.created_at.desc(), EvaluationRun.id.desc()).limit(limit).all()
        return jsonify({'runs': [run.to_dict() for run in runs]}), 200

    except Exception as e:
        current_app.logger.error(f"List evaluation runs error: {str(e)}")
        return jsonify({'error': 'Failed to list evaluation runs'}), 500


@evaluations_bp.route('/runs/<int:run_id>', methods=['GET'])
def get_run(run_id):
    try:
        run = db.session.get(EvaluationRun, run_id)
        if not run:
            return jsonify({'error': 'Evaluation run not found'}), 404

        return jsonify({'run': run.to_dict(include_details=True)}), 200

    except Exception as e:
        current_app.logger.error(f"Get evaluation run error: {str(e)}")
        return jsonify({'error': 'Failed to get evaluation run'}), 500

from extensions import db
from datetime import datetime


class EvaluationRun(db.Model):
    __tablename__ = 'evaluation_runs'

    id = db.Column(db.Integer, primary_key=True)
    task = db.Column(db.Integer, nullable=False)
    dataset_path = db.Column(db.String(500), nullable=False)
    output_path = db.Column(db.String(500))
    model_name = db.Column(db.String(200))

    # Aggregates
    episode_count = db.Column(db.Integer, default=0)
    errored_count = db.Column(db.Integer, default=0)
    mean_r_tool = db.Column(db.Float)
    mean_r_dlg = db.Column(db.Float)
    mean_r_combined = db.Column(db.Float)
    malformed_blocks = db.Column(db.Integer, default=0)
    prune_floor_count = db.Column(db.Integer, default=0)
    exit_code = db.Column(db.Integer, default=0)

    report = db.Column(db.JSON)  # Full JSON report
    created_at = db.Column(db.DateTime(timezone=True), default=datetime.utcnow)

    episodes = db.relationship('EpisodeResult', backref='run', lazy='dynamic',
                               cascade='all, delete-orphan')

    def to_dict(self, include_details=False):
        data = {
            'id': self.id,
            'task': self.task,
            'dataset_path': self.dataset_path,
            'output_path': self.output_path or '',
            'model_name': self.model_name or '',
            'episode_count': self.episode_count,
            'errored_count': self.errored_count,
            'mean_r_tool': self.mean_r_tool,
            'mean_r_dlg': self.mean_r_dlg,
            'mean_r_combined': self.mean_r_combined,
            'malformed_blocks': self.malformed_blocks,
            'prune_floor_count': self.prune_floor_count,
            'exit_code': self.exit_code,
            'created_at': self.created_at.isoformat() if self.created_at else None
        }

        if include_details:
            data['episodes'] = [episode.to_dict() for episode in self.episodes.order_by(EpisodeResult.id)]
            data['report'] = self.report if self.report is not None else {}

        return data


class EpisodeResult(db.Model):
    __tablename__ = 'episode_results'

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('evaluation_runs.id'), nullable=False)
    episode_id = db.Column(db.String(200), nullable=False)

    r_tool = db.Column(db.Float)
    r_dlg = db.Column(db.Float)
    r_combined = db.Column(db.Float)
    judge_score = db.Column(db.Integer)
    floor_reached = db.Column(db.Boolean, default=False)
    reduction_level = db.Column(db.Integer)
    malformed_blocks = db.Column(db.Integer, default=0)
    error = db.Column(db.Text)

    def to_dict(self):
        return {
            'id': self.id,
            'run_id': self.run_id,
            'episode_id': self.episode_id,
            'r_tool': self.r_tool,
            'r_dlg': self.r_dlg,
            'r_combined': self.r_combined,
            'judge_score': self.judge_score,
            'floor_reached': self.floor_reached,
            'reduction_level': self.reduction_level,
            'malformed_blocks': self.malformed_blocks,
            'error': self.error if self.error is not None else ''
        }

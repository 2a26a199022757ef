from flask import Blueprint

evaluations_bp = Blueprint('evaluations', __name__)

from . import routes
from .commands import eval_cli

from flask import Blueprint

grpo_bp = Blueprint('grpo_math', __name__)

from . import routes

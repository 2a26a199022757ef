from flask import Blueprint

context_bp = Blueprint('context_pruning', __name__)

from . import routes

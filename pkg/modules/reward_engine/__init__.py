from flask import Blueprint

rewards_bp = Blueprint('reward_engine', __name__)

from . import routes

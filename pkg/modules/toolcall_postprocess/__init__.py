from flask import Blueprint

toolcalls_bp = Blueprint('toolcall_postprocess', __name__)

from . import routes
from .annotations import EMPTY_ANNOTATIONS, ToolAnnotations, load_annotations, merge_annotations
from .merger import (
    PostprocessReport,
    canonicalize_reference_calls,
    merge_function_calls,
    postprocess_calls,
    validate_against_kb,
)
from .normalizer import coerce_arguments, normalize_parameters

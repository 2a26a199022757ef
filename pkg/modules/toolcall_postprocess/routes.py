from flask import request, jsonify, current_app
from errors import ParameterCoercionError
from models.core import KnowledgeBase, ToolCall, ToolSpec, tools_from_dicts
from . import toolcalls_bp
from .annotations import ToolAnnotations, load_annotations, merge_annotations
from .merger import merge_function_calls, postprocess_calls
from .normalizer import normalize_parameters


def _annotations_from(data):
    path = current_app.config.get('TOOL_ANNOTATIONS_PATH')
    base = load_annotations(path) if path else None
    inline = data.get('annotations')
    return merge_annotations(base, ToolAnnotations.from_dict(inline) if inline else None)


def _kb_from(data):
    kb = data.get('knowledge_base')
    return KnowledgeBase.from_dict(kb) if kb is not None else None


@toolcalls_bp.route('/normalize', methods=['POST'])
def normalize():
    try:
        data = request.get_json() or {}

        if 'call' not in data or 'tool' not in data:
            return jsonify({'error': 'call and tool are required'}), 400

        try:
            call = ToolCall.from_dict(data['call'])
            schema = ToolSpec.from_dict(data['tool'])
            normalized = normalize_parameters(
                call, schema, data.get('user_query', ''), _annotations_from(data)
            )
        except ParameterCoercionError as e:
            return jsonify({'error': str(e), 'parameter': e.parameter}), 400
        except (KeyError, TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        return jsonify({'call': normalized.to_dict()}), 200

    except Exception as e:
        current_app.logger.error(f"Normalize tool call error: {str(e)}")
        return jsonify({'error': 'Failed to normalize tool call'}), 500


@toolcalls_bp.route('/merge', methods=['POST'])
def merge():
    try:
        data = request.get_json() or {}

        if 'calls' not in data:
            return jsonify({'error': 'calls is required'}), 400

        try:
            calls = [ToolCall.from_dict(c) for c in data['calls']]
            tools = tools_from_dicts(data.get('tools'))
            kb = _kb_from(data)
            annotations = _annotations_from(data)
        except (KeyError, TypeError, ValueError) as e:
            return jsonify({'error': f'Invalid request: {e}'}), 400

        if data.get('user_query') is not None:
            merged, report = postprocess_calls(calls, tools, data['user_query'], kb, annotations)
        else:
            merged, report = merge_function_calls(calls, tools, kb, annotations)

        return jsonify({
            'calls': [call.to_dict() for call in merged],
            'report': report.to_dict()
        }), 200

    except Exception as e:
        current_app.logger.error(f"Merge tool calls error: {str(e)}")
        return jsonify({'error': 'Failed to merge tool calls'}), 500

# -*- coding: utf-8 -*-
"""
strokes.json and trace.json.

    strokes.json  {"version": 1,
                   "canvas": {"w": 64, "h": 64, "c": 1, "topology": "planar"},
                   "strokes": [{"points": [[x, y] x 4], "color": [...], "width": w}, ...]}

    trace.json    {"version": 1, "canvas": {...}, "config": {...},
                   "steps": [{"step": 0, "loss": l, "strokes": [...]}, ...]}

Floats are written with Python's shortest round-trip repr, so reading a
document back gives bit-identical values. Validation errors name the
offending field, e.g. ``strokes[2].color[0]``.
"""

import json
import math

from django_strokefit.exceptions import SchemaValidationError, TraceVersionMismatch
from django_strokefit.geometry import TOPOLOGIES, CanvasSpec, Stroke, StrokeSet
from django_strokefit.optimizer import GuidanceTrace, TraceEntry

STROKES_FORMAT_VERSION = 1
TRACE_FORMAT_VERSION = 1


"""
Writing
"""


def canvas_to_dict(canvas: CanvasSpec):
    return {'w': canvas.width, 'h': canvas.height, 'c': canvas.channels, 'topology': canvas.topology}


def _stroke_list(strokes: StrokeSet):
    return [
        {
            'points': [[float(x), float(y)] for x, y in stroke.control_points],
            'color': [float(c) for c in stroke.color],
            'width': float(stroke.width),
        }
        for stroke in strokes
    ]


def strokes_to_dict(strokes: StrokeSet, canvas: CanvasSpec):
    strokes.check_canvas(canvas)
    return {'version': STROKES_FORMAT_VERSION, 'canvas': canvas_to_dict(canvas), 'strokes': _stroke_list(strokes)}


def trace_to_dict(trace: GuidanceTrace):
    return {
        'version': TRACE_FORMAT_VERSION,
        'canvas': canvas_to_dict(trace.canvas),
        'config': trace.config,
        'steps': [
            {'step': entry.step, 'loss': float(entry.loss), 'strokes': _stroke_list(entry.strokes)}
            for entry in trace.entries
        ],
    }


def _dumps(document):
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def dumps_strokes(strokes: StrokeSet, canvas: CanvasSpec):
    return _dumps(strokes_to_dict(strokes, canvas))


def dumps_trace(trace: GuidanceTrace):
    return _dumps(trace_to_dict(trace))


def _write(path, text):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)


def write_strokes(path, strokes: StrokeSet, canvas: CanvasSpec):
    _write(path, dumps_strokes(strokes, canvas))


def write_trace(path, trace: GuidanceTrace):
    _write(path, dumps_trace(trace))


"""
Reading
"""


def _child(path, key):
    if isinstance(key, int):
        return '{}[{}]'.format(path, key)
    return '{}.{}'.format(path, key) if path else key


def _field(document, key, path, kind=None):
    if not isinstance(document, dict):
        raise SchemaValidationError(path, "expected an object")
    if key not in document:
        raise SchemaValidationError(_child(path, key), "missing field")
    value = document[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaValidationError(_child(path, key), "expected {}".format(
            {list: 'an array', dict: 'an object', str: 'a string'}.get(kind, kind.__name__)))
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaValidationError(path, "expected a number, got {!r}".format(value))
    value = float(value)
    if not math.isfinite(value):
        raise SchemaValidationError(path, "expected a finite number")
    return value


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaValidationError(path, "expected an integer, got {!r}".format(value))
    return value


def _check_version(document, expected, path=''):
    version = _field(document, 'version', path)
    if version != expected:
        raise TraceVersionMismatch(_child(path, 'version'), "unsupported version {!r}, expected {}".format(
            version, expected))


def canvas_from_dict(document, path='canvas'):
    width = _integer(_field(document, 'w', path), _child(path, 'w'))
    height = _integer(_field(document, 'h', path), _child(path, 'h'))
    channels = _integer(_field(document, 'c', path), _child(path, 'c'))
    topology = _field(document, 'topology', path, str)
    if width < 1 or height < 1:
        raise SchemaValidationError(path, "canvas size must be positive, got {}x{}".format(width, height))
    if channels not in (1, 3):
        raise SchemaValidationError(_child(path, 'c'), "channels must be 1 or 3, got {}".format(channels))
    if topology not in TOPOLOGIES:
        raise SchemaValidationError(_child(path, 'topology'), "must be one of {}".format(TOPOLOGIES))
    return CanvasSpec(width, height, channels, topology)


def _stroke_from_dict(document, path, channels):
    points_path = _child(path, 'points')
    points = _field(document, 'points', path, list)
    if len(points) != 4:
        raise SchemaValidationError(points_path, "a stroke needs 4 control points, got {}".format(len(points)))
    control_points = []
    for i, point in enumerate(points):
        point_path = _child(points_path, i)
        if not isinstance(point, list) or len(point) != 2:
            raise SchemaValidationError(point_path, "expected an [x, y] pair")
        control_points.append([_number(v, _child(point_path, k)) for k, v in enumerate(point)])

    color_path = _child(path, 'color')
    color = _field(document, 'color', path, list)
    if len(color) != channels:
        raise SchemaValidationError(color_path, "expected {} components, got {}".format(channels, len(color)))
    components = []
    for k, value in enumerate(color):
        value = _number(value, _child(color_path, k))
        if not 0.0 <= value <= 1.0:
            raise SchemaValidationError(_child(color_path, k), "color components must lie in [0, 1], got {!r}".format(
                value))
        components.append(value)

    width_path = _child(path, 'width')
    width = _number(_field(document, 'width', path), width_path)
    if not 0.0 < width <= 1.0:
        raise SchemaValidationError(width_path, "width must lie in (0, 1], got {!r}".format(width))
    return Stroke(control_points, components, width)


def _stroke_set_from_list(strokes, path, channels):
    if not isinstance(strokes, list):
        raise SchemaValidationError(path, "expected an array")
    if not strokes:
        raise SchemaValidationError(path, "at least one stroke is required")
    return StrokeSet(_stroke_from_dict(stroke, _child(path, i), channels) for i, stroke in enumerate(strokes))


def strokes_from_dict(document):
    """
    Return ``(canvas, strokes)``.
    """
    _check_version(document, STROKES_FORMAT_VERSION)
    canvas = canvas_from_dict(_field(document, 'canvas', ''))
    strokes = _stroke_set_from_list(_field(document, 'strokes', ''), 'strokes', canvas.channels)
    return canvas, strokes


def trace_from_dict(document):
    _check_version(document, TRACE_FORMAT_VERSION)
    canvas = canvas_from_dict(_field(document, 'canvas', ''))
    config = _field(document, 'config', '', dict)
    steps = _field(document, 'steps', '', list)
    if len(steps) < 2:
        raise SchemaValidationError('steps', "a trace needs step 0 and at least one checkpoint")
    entries = []
    for i, step in enumerate(steps):
        path = _child('steps', i)
        number = _integer(_field(step, 'step', path), _child(path, 'step'))
        loss = _number(_field(step, 'loss', path), _child(path, 'loss'))
        strokes = _stroke_set_from_list(_field(step, 'strokes', path), _child(path, 'strokes'), canvas.channels)
        entries.append(TraceEntry(number, strokes, loss))
    return GuidanceTrace(canvas, entries, config)


def _loads(text):
    try:
        return json.loads(text)
    except ValueError as exc:
        raise SchemaValidationError('', "not a JSON document: {}".format(exc))


def loads_strokes(text):
    return strokes_from_dict(_loads(text))


def loads_trace(text):
    return trace_from_dict(_loads(text))


def read_strokes(path):
    with open(path, encoding='utf-8') as f:
        return loads_strokes(f.read())


def read_trace(path):
    with open(path, encoding='utf-8') as f:
        return loads_trace(f.read())

# -*- coding: utf-8 -*-
"""
Fit a stroke set to a target image with Adam and keep a trace of the
intermediate stroke sets at fixed checkpoint steps.
"""

from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from django_strokefit import get_logger
from django_strokefit.exceptions import (
    InvalidConfigError, NonFiniteLossError, SchemaValidationError, ShapeMismatchError
)
from django_strokefit.geometry import CanvasSpec, Image, StrokeSet
from django_strokefit.losses import (
    MetricSpec, align_penalty, align_penalty_grad, augmented_loss_and_grad, boundary_penalty, boundary_penalty_grad
)
from django_strokefit.rasterizer import RenderConfig
from django_strokefit.utils.multiprocessing_utils import Timer

logger = get_logger()

DEFAULT_ITERATIONS = 2000
DEFAULT_CHECKPOINTS = (50, 100, 200, 400, 700, 1000, 1500, 2000)

# optimized widths are kept inside [MIN_WIDTH, 1]
MIN_WIDTH = 1e-4


@dataclass
class AdamState:
    lr: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Optional[np.ndarray] = field(default=None, repr=False)
    second_moment: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.lr > 0.0:
            raise InvalidConfigError("lr must be > 0, got {!r}".format(self.lr))
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidConfigError("Adam betas must lie in [0, 1), got {!r} and {!r}".format(self.beta1, self.beta2))
        if not self.epsilon > 0.0:
            raise InvalidConfigError("epsilon must be > 0, got {!r}".format(self.epsilon))


def adam_step(state: AdamState, params, grads):
    """
    One bias-corrected Adam update. Advances ``state`` in place and
    returns the updated parameters.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ShapeMismatchError("parameters have shape {} but gradients {}".format(params.shape, grads.shape))
    if state.first_moment is None:
        state.first_moment = np.zeros_like(params)
        state.second_moment = np.zeros_like(params)
    elif state.first_moment.shape != params.shape:
        raise ShapeMismatchError(
            "Adam moments have shape {} but parameters {}".format(state.first_moment.shape, params.shape))

    state.step += 1
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = state.first_moment / (1.0 - state.beta1 ** state.step)
    v_hat = state.second_moment / (1.0 - state.beta2 ** state.step)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def default_checkpoints(iterations):
    """
    The standard checkpoint steps up to ``iterations``, always ending at ``iterations``.
    """
    steps = [step for step in DEFAULT_CHECKPOINTS if step < iterations]
    return tuple(steps + [iterations])


@dataclass(frozen=True)
class OptimizeConfig:
    iterations: int = DEFAULT_ITERATIONS
    # None means default_checkpoints(iterations)
    checkpoints: Optional[Tuple[int, ...]] = None
    lr: float = 1.0
    # multiplies the learning rate after every step; 1.0 keeps it constant
    lr_decay: float = 1.0
    metric: MetricSpec = field(default_factory=MetricSpec)
    lambda_p: float = 0.1
    optimize_color: bool = False
    optimize_width: bool = False
    anneal: bool = True
    metric_weight: float = 1.0
    render: RenderConfig = field(default_factory=RenderConfig)
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if isinstance(self.iterations, bool) or int(self.iterations) != self.iterations or self.iterations < 1:
            raise InvalidConfigError("iterations must be an integer >= 1, got {!r}".format(self.iterations))
        object.__setattr__(self, 'iterations', int(self.iterations))
        checkpoints = default_checkpoints(self.iterations) if self.checkpoints is None else self.checkpoints
        checkpoints = tuple(sorted({int(step) for step in checkpoints}))
        if not checkpoints:
            raise InvalidConfigError("at least one checkpoint is required")
        if checkpoints[0] < 1 or checkpoints[-1] > self.iterations:
            raise InvalidConfigError(
                "checkpoints must lie in [1, {}], got {}".format(self.iterations, list(checkpoints)))
        object.__setattr__(self, 'checkpoints', checkpoints)
        if not self.lr > 0.0:
            raise InvalidConfigError("lr must be > 0, got {!r}".format(self.lr))
        if not 0.0 < self.lr_decay <= 1.0:
            raise InvalidConfigError("lr_decay must lie in (0, 1], got {!r}".format(self.lr_decay))
        if not self.lambda_p >= 0.0:
            raise InvalidConfigError("lambda_p must be >= 0, got {!r}".format(self.lambda_p))
        if not self.metric_weight >= 0.0:
            raise InvalidConfigError("metric_weight must be >= 0, got {!r}".format(self.metric_weight))
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfigError("seed must be an unsigned integer, got {!r}".format(self.seed))

    def learning_rate(self, step):
        """
        Learning rate of the ``step``-th update (1-based).
        """
        return self.lr * self.lr_decay ** (step - 1)

    def tau(self, step):
        if self.anneal:
            return step / self.iterations
        return self.render.anneal_tau

    def snapshot(self):
        """
        The settings that determine a run, as stored in trace.json.
        """
        ranges = self.metric.augment_ranges
        return {
            'iterations': self.iterations,
            'checkpoints': list(self.checkpoints),
            'lr': self.lr,
            'lr_decay': self.lr_decay,
            'lambda_p': self.lambda_p,
            'metric_weight': self.metric_weight,
            'optimize_color': self.optimize_color,
            'optimize_width': self.optimize_width,
            'anneal': self.anneal,
            'seed': self.seed,
            'metric': {
                'kind': self.metric.kind,
                'augment_samples': self.metric.augment_samples,
                'rotation_degrees': list(ranges.rotation_degrees),
                'translation': list(ranges.translation),
                'scale': list(ranges.scale),
                'pixel_snap': ranges.pixel_snap,
            },
            'render': {
                'composition': self.render.composition,
                'intensity_clamp': self.render.intensity_clamp,
                'supersample': self.render.supersample,
                'background': list(self.render.background),
            },
        }


class TraceEntry(NamedTuple):
    step: int
    strokes: StrokeSet
    loss: float


class GuidanceTrace(object):
    """
    The initial stroke set (step 0) followed by one entry per checkpoint.
    """

    def __init__(self, canvas: CanvasSpec, entries: List[TraceEntry], config: Optional[dict] = None):
        entries = list(entries)
        if len(entries) < 2:
            raise SchemaValidationError('steps', "a trace needs the initial strokes and at least one checkpoint")
        if entries[0].step != 0:
            raise SchemaValidationError('steps[0].step', "the first entry must be step 0")
        for index in range(1, len(entries)):
            if entries[index].step <= entries[index - 1].step:
                raise SchemaValidationError(
                    'steps[{}].step'.format(index), "steps must be strictly increasing")
            if len(entries[index].strokes) != len(entries[0].strokes):
                raise SchemaValidationError(
                    'steps[{}].strokes'.format(index), "every entry must have the same number of strokes")
        self.canvas = canvas
        self.entries = entries
        self.config = dict(config or {})

    def __eq__(self, other):
        if not isinstance(other, GuidanceTrace):
            return NotImplemented
        return self.canvas == other.canvas and self.entries == other.entries and self.config == other.config

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return 'GuidanceTrace(steps={}, final_loss={!r})'.format(self.steps, self.final.loss)

    @property
    def steps(self):
        return [entry.step for entry in self.entries]

    @property
    def checkpoints(self):
        return tuple(self.steps[1:])

    @property
    def initial(self):
        return self.entries[0]

    @property
    def final(self):
        return self.entries[-1]


def _penalties(control_points):
    value = boundary_penalty(control_points) + align_penalty(control_points)
    return value, boundary_penalty_grad(control_points) + align_penalty_grad(control_points)


def _objective(target, control_points, colors, widths, cfg: OptimizeConfig, step, workers):
    penalty, d_penalty = _penalties(control_points)
    if cfg.metric_weight > 0.0:
        render_config = cfg.render.with_tau(cfg.tau(step))
        metric, d_cp, d_colors, d_widths = augmented_loss_and_grad(
            cfg.metric, target, control_points, colors, widths, target.canvas, render_config,
            seed=cfg.seed, step=step, workers=workers)
    else:
        metric, d_cp, d_colors, d_widths = 0.0, 0.0, np.zeros_like(colors), np.zeros_like(widths)
    loss = cfg.metric_weight * metric + cfg.lambda_p * penalty
    d_cp = cfg.metric_weight * d_cp + cfg.lambda_p * d_penalty
    return loss, d_cp, cfg.metric_weight * d_colors, cfg.metric_weight * d_widths


def _check_finite(step, loss, *grads):
    if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
        raise NonFiniteLossError(step, loss)


def optimize(target: Image, init: StrokeSet, cfg: Optional[OptimizeConfig] = None,
             progress: Optional[Callable[[int, float], None]] = None, workers=None) -> GuidanceTrace:
    """
    Minimize ``metric_weight * metric + lambda_p * (boundary + align)`` over
    the control points (and colors / widths when enabled).

    The trace holds the initial strokes with their loss at step 0 and, for
    every checkpoint k, the strokes after the k-th update with their loss
    re-evaluated at step k.
    """
    cfg = cfg or OptimizeConfig()
    canvas = target.canvas
    init.check_canvas(canvas)

    control_points = np.array(init.control_points)
    colors = np.array(init.colors)
    widths = np.array(init.widths)
    n = len(init)
    state = AdamState(lr=cfg.lr)
    checkpoints = set(cfg.checkpoints)
    timer = Timer()

    logger.info("Fitting {} strokes to a {}x{} target for {} iterations".format(
        n, canvas.width, canvas.height, cfg.iterations))

    initial_loss = _objective(target, control_points, colors, widths, cfg, 0, workers)[0]
    _check_finite(0, initial_loss)
    entries = [TraceEntry(0, init, float(initial_loss))]

    for step in range(1, cfg.iterations + 1):
        loss, d_cp, d_colors, d_widths = _objective(target, control_points, colors, widths, cfg, step, workers)
        _check_finite(step, loss, d_cp, d_colors, d_widths)

        params = [control_points.ravel()]
        grads = [d_cp.ravel()]
        if cfg.optimize_color:
            params.append(colors.ravel())
            grads.append(d_colors.ravel())
        if cfg.optimize_width:
            params.append(widths)
            grads.append(d_widths)
        state.lr = cfg.learning_rate(step)
        updated = adam_step(state, np.concatenate(params), np.concatenate(grads))

        control_points = updated[:n * 8].reshape(control_points.shape)
        offset = n * 8
        if cfg.optimize_color:
            colors = np.clip(updated[offset:offset + colors.size].reshape(colors.shape), 0.0, 1.0)
            offset += colors.size
        if cfg.optimize_width:
            widths = np.clip(updated[offset:offset + n], MIN_WIDTH, 1.0)

        if progress is not None:
            progress(step, float(loss))
        if cfg.log_every and step % cfg.log_every == 0:
            logger.debug("step {}/{}: loss {:.6g}".format(step, cfg.iterations, loss))

        if step in checkpoints:
            checkpoint_loss = _objective(target, control_points, colors, widths, cfg, step, workers)[0]
            _check_finite(step, checkpoint_loss)
            strokes = StrokeSet.from_arrays(control_points, colors, widths)
            entries.append(TraceEntry(step, strokes, float(checkpoint_loss)))

    logger.info("Finished {} iterations in {:.1f}s; final loss {:.6g}".format(
        cfg.iterations, timer.done(), entries[-1].loss))
    return GuidanceTrace(canvas, entries, cfg.snapshot())

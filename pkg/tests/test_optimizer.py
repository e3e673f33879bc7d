from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase

from django_strokefit.exceptions import (
    CanvasMismatchError, InvalidConfigError, NonFiniteLossError, SchemaValidationError, ShapeMismatchError
)
from django_strokefit.geometry import CanvasSpec, Image, StrokeSet
from django_strokefit.losses import METRIC_EXTERNAL, MetricSpec, boundary_penalty
from django_strokefit.optimizer import (
    DEFAULT_CHECKPOINTS, MIN_WIDTH, AdamState, GuidanceTrace, OptimizeConfig, TraceEntry, adam_step,
    default_checkpoints, optimize
)
from django_strokefit.rasterizer import RenderConfig, render
from django_strokefit.utils.test_utils import StrokefitTestCaseMixin


class NotANumber(object):

    def __call__(self, target, sketch):
        return float('nan')

    def adjoint(self, target, sketch):
        return np.zeros_like(sketch)


class TestAdam(SimpleTestCase):

    def test_first_step_has_the_learning_rate_as_length(self):
        state = AdamState(lr=0.1)
        updated = adam_step(state, np.array([1.0, -2.0]), np.array([3.0, -0.5]))
        np.testing.assert_allclose(updated, [0.9, -1.9], atol=1e-8)
        self.assertEqual(state.step, 1)

    def test_quadratic(self):
        state = AdamState(lr=0.1)
        x = np.array([1.0])
        for _ in range(100):
            x = adam_step(state, x, 2.0 * x)
        self.assertLess(abs(x[0]), 0.1)

    def test_zero_gradient_keeps_parameters(self):
        state = AdamState()
        params = np.array([0.25, 0.5])
        np.testing.assert_array_equal(adam_step(state, params, np.zeros(2)), params)

    def test_shape_mismatch(self):
        state = AdamState()
        with self.assertRaises(ShapeMismatchError):
            adam_step(state, np.zeros(2), np.zeros(3))
        adam_step(state, np.zeros(2), np.zeros(2))
        with self.assertRaises(ShapeMismatchError):
            adam_step(state, np.zeros(3), np.zeros(3))

    def test_validation(self):
        for kwargs in ({'lr': 0.0}, {'beta1': 1.0}, {'beta2': -0.1}, {'epsilon': 0.0}):
            with self.assertRaises(InvalidConfigError, msg=repr(kwargs)):
                AdamState(**kwargs)


class TestOptimizeConfig(SimpleTestCase):

    def test_default_checkpoints(self):
        self.assertEqual(default_checkpoints(2000), DEFAULT_CHECKPOINTS)
        self.assertEqual(default_checkpoints(300), (50, 100, 200, 300))
        self.assertEqual(default_checkpoints(10), (10,))
        self.assertEqual(OptimizeConfig(iterations=120).checkpoints, (50, 100, 120))

    def test_checkpoints_are_sorted_and_deduplicated(self):
        self.assertEqual(OptimizeConfig(iterations=10, checkpoints=[5, 2, 5]).checkpoints, (2, 5))

    def test_validation(self):
        for kwargs in ({'iterations': 0}, {'iterations': 10, 'checkpoints': [11]},
                       {'iterations': 10, 'checkpoints': [0]}, {'iterations': 10, 'checkpoints': []},
                       {'lr': 0.0}, {'lr_decay': 0.0}, {'lr_decay': 1.5}, {'lambda_p': -1.0}, {'metric_weight': -1.0},
                       {'seed': -1}):
            with self.assertRaises(InvalidConfigError, msg=repr(kwargs)):
                OptimizeConfig(**kwargs)

    def test_tau(self):
        cfg = OptimizeConfig(iterations=200)
        self.assertEqual(cfg.tau(0), 0.0)
        self.assertEqual(cfg.tau(50), 0.25)
        self.assertEqual(cfg.tau(200), 1.0)
        fixed = OptimizeConfig(iterations=200, anneal=False, render=RenderConfig(anneal_tau=0.5))
        self.assertEqual(fixed.tau(50), 0.5)

    def test_learning_rate(self):
        self.assertEqual(OptimizeConfig(lr=0.05).learning_rate(1500), 0.05)
        decaying = OptimizeConfig(lr=0.5, lr_decay=0.5)
        self.assertEqual(decaying.learning_rate(1), 0.5)
        self.assertEqual(decaying.learning_rate(3), 0.125)

    def test_snapshot(self):
        snapshot = OptimizeConfig(iterations=20, lr=0.05).snapshot()
        self.assertEqual(snapshot['iterations'], 20)
        self.assertEqual(snapshot['checkpoints'], [20])
        self.assertEqual(snapshot['lr'], 0.05)
        self.assertEqual(snapshot['lr_decay'], 1.0)
        self.assertEqual(snapshot['metric']['kind'], 'l1')
        self.assertEqual(snapshot['render']['background'], [1.0])


class TestGuidanceTrace(StrokefitTestCaseMixin, SimpleTestCase):

    def test_validation(self):
        canvas = self.make_canvas(8)
        strokes = self.make_strokes(n=2)
        with self.assertRaises(SchemaValidationError):
            GuidanceTrace(canvas, [TraceEntry(0, strokes, 1.0)])
        with self.assertRaises(SchemaValidationError):
            GuidanceTrace(canvas, [TraceEntry(1, strokes, 1.0), TraceEntry(2, strokes, 1.0)])
        with self.assertRaises(SchemaValidationError):
            GuidanceTrace(canvas, [TraceEntry(0, strokes, 1.0), TraceEntry(0, strokes, 1.0)])
        with self.assertRaises(SchemaValidationError):
            GuidanceTrace(canvas, [TraceEntry(0, strokes, 1.0), TraceEntry(5, self.make_strokes(n=3), 1.0)])

    def test_accessors(self):
        strokes = self.make_strokes(n=2)
        trace = GuidanceTrace(self.make_canvas(8), [TraceEntry(0, strokes, 2.0), TraceEntry(5, strokes, 1.0),
                                                    TraceEntry(9, strokes, 0.5)])
        self.assertEqual(trace.steps, [0, 5, 9])
        self.assertEqual(trace.checkpoints, (5, 9))
        self.assertEqual(trace.initial.loss, 2.0)
        self.assertEqual(trace.final.loss, 0.5)
        self.assertEqual(len(trace), 3)


class TestOptimize(StrokefitTestCaseMixin, SimpleTestCase):

    def test_trace_layout(self):
        canvas = self.make_canvas(16)
        init = self.make_strokes(n=2)
        target = render(self.make_strokes(n=2, seed=1), canvas)
        trace = optimize(target, init, OptimizeConfig(iterations=6, checkpoints=[2, 6], lr=0.01), workers=1)
        self.assertEqual(trace.steps, [0, 2, 6])
        self.assertEqual(trace.initial.strokes, init)
        self.assertEqual(trace.canvas, canvas)
        self.assertEqual(trace.config['iterations'], 6)

    def test_render_of_the_init_is_a_fixed_point(self):
        canvas = self.make_canvas(16)
        init = self.make_strokes(n=3)
        cfg = OptimizeConfig(iterations=5, lr=0.05, anneal=False, lambda_p=0.0)
        trace = optimize(render(init, canvas), init, cfg, workers=1)
        np.testing.assert_array_equal(trace.final.strokes.control_points, init.control_points)
        self.assertEqual(max(entry.loss for entry in trace.entries), 0.0)

    def test_loss_goes_down(self):
        canvas = self.make_canvas(24)
        truth = self.make_strokes(n=2, seed=2, width_range=(0.1, 0.15))
        init = StrokeSet.from_arrays(
            truth.control_points + self.rng(2).normal(0.0, 0.05, size=truth.control_points.shape),
            truth.colors, truth.widths)
        cfg = OptimizeConfig(iterations=40, lr=0.005, anneal=False, lambda_p=0.0)
        trace = optimize(render(truth, canvas), init, cfg, workers=1)
        self.assertLess(trace.final.loss, trace.initial.loss)

    def test_learning_rate_decays_every_step(self):
        rates = []

        def recording_step(state, params, grads):
            rates.append(state.lr)
            return adam_step(state, params, grads)

        cfg = OptimizeConfig(iterations=3, lr=0.4, lr_decay=0.5)
        with patch('django_strokefit.optimizer.adam_step', side_effect=recording_step):
            optimize(Image.filled(self.make_canvas(8)), self.make_strokes(n=1), cfg, workers=1)
        self.assertEqual(rates, [0.4, 0.2, 0.1])

    def test_progress_callback(self):
        calls = []
        canvas = self.make_canvas(8)
        optimize(Image.filled(canvas), self.make_strokes(n=1), OptimizeConfig(iterations=4, lr=0.01),
                 progress=lambda step, loss: calls.append(step), workers=1)
        self.assertEqual(calls, [1, 2, 3, 4])

    def test_colors_and_widths_only_move_when_enabled(self):
        canvas = self.make_canvas(16)
        init = self.make_strokes(n=2)
        target = render(self.make_strokes(n=2, seed=3), canvas)
        fixed = optimize(target, init, OptimizeConfig(iterations=3, lr=0.01), workers=1).final.strokes
        np.testing.assert_array_equal(fixed.colors, init.colors)
        np.testing.assert_array_equal(fixed.widths, init.widths)

        cfg = OptimizeConfig(iterations=3, lr=0.01, optimize_color=True, optimize_width=True)
        free = optimize(target, init, cfg, workers=1).final.strokes
        self.assertFalse(np.array_equal(free.colors, init.colors))
        self.assertFalse(np.array_equal(free.widths, init.widths))
        self.assertTrue(np.all(free.widths >= MIN_WIDTH) and np.all(free.widths <= 1.0))
        self.assertTrue(np.all(free.colors >= 0.0) and np.all(free.colors <= 1.0))

    def test_penalties_pull_strokes_inside(self):
        canvas = CanvasSpec(8, 8)
        strokes = StrokeSet.from_arrays([[[0.0, 0.2], [0.3, 0.1], [0.6, -0.1], [1.5, 0.0]]], [[0.0]], [0.05])
        cfg = OptimizeConfig(iterations=500, lr=0.01, metric_weight=0.0, lambda_p=0.1)
        trace = optimize(Image.filled(canvas), strokes, cfg)
        self.assertEqual(trace.initial.loss, 0.05)
        self.assertLess(boundary_penalty(trace.final.strokes), 1e-3)

    def test_non_finite_loss(self):
        canvas = self.make_canvas(8)
        cfg = OptimizeConfig(iterations=3, metric=MetricSpec(kind=METRIC_EXTERNAL, external=NotANumber()))
        with self.assertRaises(NonFiniteLossError) as context:
            optimize(Image.filled(canvas), self.make_strokes(n=1), cfg, workers=1)
        self.assertEqual(context.exception.step, 0)
        self.assertEqual(context.exception.exit_code, 2)

    def test_channel_mismatch(self):
        with self.assertRaises(CanvasMismatchError):
            optimize(Image.filled(self.make_canvas(8)), self.make_strokes(n=1, channels=3),
                     OptimizeConfig(iterations=1))

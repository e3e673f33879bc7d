from django.test import SimpleTestCase, override_settings

from django_strokefit.exceptions import InvalidConfigError
from django_strokefit.utils.config import RunConfig, read_toml
from django_strokefit.utils.test_utils import StrokefitTestCaseMixin


class TestRunConfig(SimpleTestCase):

    def test_defaults(self):
        config = RunConfig()
        self.assertEqual(config.n_strokes, 16)
        self.assertEqual(config.lr, 0.05)
        self.assertEqual(config.background, (1.0,))
        self.assertIsNone(config.checkpoints)
        self.assertEqual(config.non_defaults(), {})
        self.assertEqual(config.optimize_config().checkpoints[-1], 2000)

    def test_coercion(self):
        config = RunConfig(
            n_strokes='3', optimize_color='yes', anneal='false', background=0.5, checkpoints=[5, 10], iterations=10,
            rotation_degrees=[-5, 5])
        self.assertEqual(config.n_strokes, 3)
        self.assertIs(config.optimize_color, True)
        self.assertIs(config.anneal, False)
        self.assertEqual(config.background, (0.5,))
        self.assertEqual(config.checkpoints, (5, 10))
        self.assertEqual(config.rotation_degrees, (-5.0, 5.0))
        self.assertEqual(config.optimize_config().checkpoints, (5, 10))

    def test_coercion_errors(self):
        for kwargs in ({'n_strokes': 1.5}, {'n_strokes': True}, {'optimize_color': 'maybe'},
                       {'rotation_degrees': [1.0, 2.0, 3.0]}, {'lr': 'fast'}):
            with self.assertRaises(InvalidConfigError, msg=repr(kwargs)):
                RunConfig(**kwargs)

    def test_ranges_are_checked(self):
        for kwargs in ({'threads': -1}, {'topology': 'sphere'}, {'beta': 0.0}, {'iterations': 0},
                       {'metric': 'l2'}, {'composition': 'multiply'}, {'supersample': 0}):
            with self.assertRaises(InvalidConfigError, msg=repr(kwargs)):
                RunConfig(**kwargs)

    def test_sub_configs(self):
        config = RunConfig(n_strokes=4, init_width=0.1, seed=9, augment_samples=2, pixel_snap=True,
                           composition='over', anneal=False)
        init = config.init_config()
        self.assertEqual((init.n_strokes, init.width, init.seed), (4, 0.1, 9))
        self.assertEqual(config.render_config(0.5).anneal_tau, 0.5)
        self.assertEqual(config.render_config().composition, 'over')
        metric = config.metric_spec()
        self.assertEqual(metric.augment_samples, 2)
        self.assertTrue(metric.augment_ranges.pixel_snap)
        optimize = config.optimize_config()
        self.assertFalse(optimize.anneal)
        self.assertEqual(optimize.seed, 9)

    def test_non_defaults(self):
        config = RunConfig(n_strokes=4, background=0.5, lr=0.05)
        self.assertEqual(config.non_defaults(), {'n_strokes': 4, 'background': [0.5]})


class TestRunConfigLoad(StrokefitTestCaseMixin, SimpleTestCase):

    def write_toml(self, text):
        path = self.output_path('run.toml')
        with open(path, 'w') as f:
            f.write(text)
        return path

    def test_flags_ignore_none_and_unrelated_options(self):
        config = RunConfig.load({'n_strokes': 4, 'lr': None, 'verbosity': 2, 'output_dir': '/tmp'})
        self.assertEqual(config.n_strokes, 4)
        self.assertEqual(config.lr, 0.05)

    @override_settings(STROKEFIT_DEFAULTS={'n-strokes': 8, 'lr': 0.1, 'sigma': 3.0})
    def test_precedence(self):
        self.assertEqual(RunConfig.load().n_strokes, 8)
        path = self.write_toml('n-strokes = 12\nlr = 0.2\ntranslation = [-0.05, 0.05]\n')
        config = RunConfig.load({'lr': 0.3}, path)
        self.assertEqual(config.n_strokes, 12)
        self.assertEqual(config.lr, 0.3)
        self.assertEqual(config.sigma, 3.0)
        self.assertEqual(config.translation, (-0.05, 0.05))

    @override_settings(STROKEFIT_DEFAULTS={'strokes': 8})
    def test_unknown_setting(self):
        with self.assertRaises(InvalidConfigError):
            RunConfig.load()

    def test_unknown_toml_key(self):
        path = self.write_toml('learning_rate = 0.2\n')
        with self.assertRaises(InvalidConfigError) as context:
            RunConfig.load(config_path=path)
        self.assertIn('learning_rate', str(context.exception))

    def test_bad_toml(self):
        with self.assertRaises(InvalidConfigError):
            read_toml(self.write_toml('lr = \n'))
        with self.assertRaises(InvalidConfigError):
            read_toml(self.output_path('missing.toml'))

    def test_toml_values_are_coerced(self):
        path = self.write_toml('optimize_width = true\nbackground = [1.0, 0.5, 0.0]\ncheckpoints = [1, 2]\n'
                               'iterations = 2\n')
        config = RunConfig.load(config_path=path)
        self.assertTrue(config.optimize_width)
        self.assertEqual(config.background, (1.0, 0.5, 0.0))
        self.assertEqual(config.checkpoints, (1, 2))

# -*- coding: utf-8 -*-
"""
RunConfig: the flat, merged view of every setting a management command needs.

Values are layered, later sources winning:

    built-in defaults < settings.STROKEFIT_DEFAULTS < --config TOML file < command-line flags

A TOML file uses the flag names as top-level keys, with dashes or underscores:

    n-strokes = 24
    lr = 0.05
    checkpoints = [50, 100, 200]
    rotation_degrees = [-10.0, 10.0]
"""

from dataclasses import dataclass, fields
from typing import Optional, Tuple

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from django_strokefit import get_defaults, get_logger
from django_strokefit.exceptions import InvalidConfigError
from django_strokefit.geometry import TOPOLOGIES, TOPOLOGY_PLANAR
from django_strokefit.initialization import InitConfig
from django_strokefit.losses import AugmentRanges, MetricSpec
from django_strokefit.optimizer import OptimizeConfig
from django_strokefit.rasterizer import COMPOSITION_COLOR_REPLACE, RenderConfig

logger = get_logger()

SOURCE_SETTINGS = 'STROKEFIT_DEFAULTS'


def _to_bool(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ('true', 'yes', '1', 'false', 'no', '0'):
        return value.lower() in ('true', 'yes', '1')
    raise ValueError("expected a boolean, got {!r}".format(value))


def _to_int(value):
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ValueError("expected an integer, got {!r}".format(value))
    return int(value)


def _to_pair(value):
    pair = tuple(float(v) for v in value)
    if len(pair) != 2:
        raise ValueError("expected a [low, high] pair, got {!r}".format(value))
    return pair


def _to_floats(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),)
    return tuple(float(v) for v in value)


def _to_steps(value):
    if value is None:
        return None
    return tuple(_to_int(v) for v in value)


@dataclass(frozen=True)
class RunConfig:
    # initialization
    n_strokes: int = 16
    sigma: float = 5.0
    beta: float = 5.0
    perturb_std: float = 0.05
    init_width: float = 0.05
    seed: int = 0

    # optimization
    iterations: int = 2000
    checkpoints: Optional[Tuple[int, ...]] = None
    lr: float = 0.05
    lambda_p: float = 0.1
    optimize_color: bool = False
    optimize_width: bool = False
    anneal: bool = True
    log_every: int = 100

    # metric and augmentation
    metric: str = 'l1'
    augment_samples: int = 0
    rotation_degrees: Tuple[float, float] = (-10.0, 10.0)
    translation: Tuple[float, float] = (-0.1, 0.1)
    scale: Tuple[float, float] = (0.9, 1.1)
    pixel_snap: bool = False

    # rendering
    composition: str = COMPOSITION_COLOR_REPLACE
    supersample: int = 1
    background: Tuple[float, ...] = (1.0,)
    topology: str = TOPOLOGY_PLANAR

    # 0 means STROKEFIT_THREADS or all cores but one
    threads: int = 0

    def __post_init__(self):
        for config_field in fields(self):
            value = getattr(self, config_field.name)
            try:
                value = COERCIONS[config_field.name](value)
            except (TypeError, ValueError) as exc:
                raise InvalidConfigError("{}: {}".format(config_field.name, exc))
            object.__setattr__(self, config_field.name, value)
        if self.threads < 0:
            raise InvalidConfigError("threads must be >= 0, got {}".format(self.threads))
        if self.topology not in TOPOLOGIES:
            raise InvalidConfigError("topology must be one of {}, got {!r}".format(TOPOLOGIES, self.topology))
        # building the sub-configs validates every range
        self.init_config()
        self.optimize_config()

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def load(cls, flags=None, config_path=None):
        """
        Merge the layered sources. ``flags`` holds command-line options;
        entries that are None or not RunConfig fields are ignored.
        """
        values = {}
        values.update(cls._normalize(get_defaults(), SOURCE_SETTINGS))
        if config_path:
            values.update(cls._normalize(read_toml(config_path), config_path))
        for name, value in (flags or {}).items():
            if name in COERCIONS and value is not None:
                values[name] = value
        return cls(**values)

    @classmethod
    def _normalize(cls, values, source):
        normalized = {}
        for key, value in values.items():
            name = key.replace('-', '_')
            if name not in COERCIONS:
                raise InvalidConfigError("unknown setting {!r} in {}; valid names are {}".format(
                    key, source, ", ".join(cls.field_names())))
            normalized[name] = value
        return normalized

    def init_config(self) -> InitConfig:
        return InitConfig(
            n_strokes=self.n_strokes, sigma=self.sigma, beta=self.beta, perturb_std=self.perturb_std,
            seed=self.seed, width=self.init_width)

    def render_config(self, tau=1.0) -> RenderConfig:
        return RenderConfig(
            anneal_tau=tau, composition=self.composition, supersample=self.supersample, background=self.background)

    def metric_spec(self) -> MetricSpec:
        ranges = AugmentRanges(
            rotation_degrees=self.rotation_degrees, translation=self.translation, scale=self.scale,
            pixel_snap=self.pixel_snap)
        return MetricSpec(kind=self.metric, augment_samples=self.augment_samples, augment_ranges=ranges)

    def optimize_config(self) -> OptimizeConfig:
        return OptimizeConfig(
            iterations=self.iterations, checkpoints=self.checkpoints, lr=self.lr, metric=self.metric_spec(),
            lambda_p=self.lambda_p, optimize_color=self.optimize_color, optimize_width=self.optimize_width,
            anneal=self.anneal, render=self.render_config(), seed=self.seed, log_every=self.log_every)

    def non_defaults(self):
        """
        The settings that differ from the built-in defaults, JSON-ready.
        """
        changed = {}
        for config_field in fields(self):
            value = getattr(self, config_field.name)
            if value != config_field.default:
                changed[config_field.name] = list(value) if isinstance(value, tuple) else value
        return changed


COERCIONS = {
    'n_strokes': _to_int,
    'sigma': float,
    'beta': float,
    'perturb_std': float,
    'init_width': float,
    'seed': _to_int,
    'iterations': _to_int,
    'checkpoints': _to_steps,
    'lr': float,
    'lambda_p': float,
    'optimize_color': _to_bool,
    'optimize_width': _to_bool,
    'anneal': _to_bool,
    'log_every': _to_int,
    'metric': str,
    'augment_samples': _to_int,
    'rotation_degrees': _to_pair,
    'translation': _to_pair,
    'scale': _to_pair,
    'pixel_snap': _to_bool,
    'composition': str,
    'supersample': _to_int,
    'background': _to_floats,
    'topology': str,
    'threads': _to_int,
}


def read_toml(path):
    try:
        with open(path, 'rb') as f:
            values = tomllib.load(f)
    except OSError as exc:
        raise InvalidConfigError("Cannot read config file {}: {}".format(path, exc))
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfigError("{} is not valid TOML: {}".format(path, exc))
    logger.debug("Read {} setting(s) from {}".format(len(values), path))
    return values

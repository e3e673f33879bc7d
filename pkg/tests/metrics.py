"""
An external image metric for the tests, loaded through STROKEFIT_EXTERNAL_METRIC.
"""

import numpy as np


class SquaredError(object):
    """
    Mean squared pixel difference, with its adjoint for optimization.
    """

    def __call__(self, target, sketch):
        return float(np.mean((np.asarray(sketch) - np.asarray(target)) ** 2))

    def adjoint(self, target, sketch):
        sketch = np.asarray(sketch)
        return 2.0 * (sketch - np.asarray(target)) / sketch.size


squared_error = SquaredError()


def no_adjoint(target, sketch):
    return float(np.mean(np.abs(np.asarray(sketch) - np.asarray(target))))


class NotANumber(object):
    """
    A metric that is never finite; optimizing against it must stop on step 0.
    """

    def __call__(self, target, sketch):
        return float('nan')

    def adjoint(self, target, sketch):
        return np.zeros_like(np.asarray(sketch))


not_a_number = NotANumber()

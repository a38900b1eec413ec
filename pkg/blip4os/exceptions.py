#!/usr/bin/env python3
# coding: utf-8
"""
File: exceptions.py
Description: Exception and warning classes used throughout blip4os.

Argument and precondition errors are plain ValueErrors, everything that goes
wrong inside the numerics derives from ArithmeticError.
"""


class InvariantViolation(ValueError):
    """A moment set, sample or predictor does not satisfy its invariants"""

    def __init__(self, message):
        super().__init__("invariant violation: " + message)


class MomentFileError(ValueError):
    """The moment file could not be parsed"""


class NumericalError(ArithmeticError):
    """Base class of all numerical failures"""


class QuadratureError(NumericalError):
    """Quadrature did not reach the requested relative tolerance"""


class SingularSystemError(NumericalError):
    """A matrix that has to be positive definite is not"""


class DegenerateScaleError(NumericalError, ZeroDivisionError):
    """The scale estimate is zero, delta cannot be formed"""


class BoundaryMaximumError(NumericalError):
    """The maximum of an efficiency function lies on the search boundary"""

    def __init__(self, delta, value, interval):
        self.delta = delta
        self.value = value
        self.interval = interval
        super().__init__("maximum {:.6g} attained at boundary delta={:.6g} of {}"
                         .format(value, delta, interval))


class MomentWarning(UserWarning):
    """Warning-level moment checks (decay, nudges)"""


class PluginDeltaWarning(UserWarning):
    """The plug-in delta is numerically unstable"""

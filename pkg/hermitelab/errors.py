# coding: utf-8
"""Exceptions raised by hermitelab.

Every error derives from the matching builtin as well, so callers that only
know about ``ValueError`` or ``RuntimeError`` keep working.
"""
from __future__ import absolute_import, division, print_function

from munch import Munch


class HermitelabError(Exception):
    """Base class for all hermitelab errors."""


class DomainError(HermitelabError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class ShapeError(HermitelabError, ValueError):
    """Lengths or grids of the operands do not match."""


class ResourceError(HermitelabError, RuntimeError):
    """The request would exceed a configured order or size limit."""


class NumericError(HermitelabError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Attributes:
        diagnostics (Munch): what was being computed and how far off it was.
    """

    def __init__(self, message, **diagnostics):
        super(NumericError, self).__init__(message)
        self.diagnostics = Munch(diagnostics)


class ConfigError(HermitelabError, ValueError):
    """An experiment configuration could not be parsed or validated.

    Attributes:
        line (int): 1-based line number in the config text, or None.
        key (str): the offending key, or None.
    """

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        self.reason = message
        where = []
        if line is not None:
            where.append('line %d' % line)
        if key is not None:
            where.append("key '%s'" % key)
        if where:
            message = '%s: %s' % (', '.join(where), message)
        super(ConfigError, self).__init__(message)

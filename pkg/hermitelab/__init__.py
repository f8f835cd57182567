# coding: utf-8
"""
    hermitelab
    ----------

    Hermite processes on a discretized Wiener space: simulation, Malliavin
    derivatives, Malliavin matrices and the statistical checks around them.

    :copyright: (c) 2026 by the hermitelab authors.
    :license: MIT, see LICENSE for more details.
"""

__title__ = 'hermitelab'
__version__ = '0.1.0'
__author__ = 'hermitelab authors <hermitelab@users.noreply.github.com>'
__license__ = 'MIT'
__copyright__ = 'Copyright 2026 the hermitelab authors'

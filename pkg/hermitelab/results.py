# coding: utf-8
"""Result rows, result tables and test reports.

Rows and tables export through tablib, so every data file the CLI writes is
a ``tablib.Dataset`` rendering.
"""
from __future__ import absolute_import, division, print_function

from collections import OrderedDict
from numbers import Integral, Real

import numpy as np
import tablib
from munch import Munch


def plain(value):
    """Converts numpy scalars and arrays (recursively) to builtin types."""
    if isinstance(value, dict):
        return dict((k, plain(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, Integral):
        return int(value)
    if isinstance(value, Real):
        return float(value)
    return value


def _format_cell(value):
    # repr round-trips every float
    if isinstance(value, float):
        return repr(value)
    return value


class ResultRow(object):
    """A row of a result table."""
    __slots__ = ('_keys', '_values')

    def __init__(self, keys, values):
        self._keys = list(keys)
        self._values = [plain(v) for v in values]

        # Ensure that lengths match properly.
        assert len(self._keys) == len(self._values)

    def keys(self):
        """Returns the list of column names."""
        return self._keys

    def values(self):
        """Returns the list of values."""
        return self._values

    def __repr__(self):
        return '<ResultRow {}>'.format(self.as_dict())

    def __getitem__(self, key):
        # Support for index-based lookup.
        if isinstance(key, int):
            return self._values[key]

        if key in self._keys:
            return self._values[self._keys.index(key)]

        raise KeyError("ResultRow contains no '{}' column.".format(key))

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError as e:
            raise AttributeError(e)

    def get(self, key, default=None):
        """Returns the value for a given column, or default."""
        try:
            return self[key]
        except KeyError:
            return default

    def as_dict(self, ordered=False):
        items = zip(self._keys, self._values)
        return OrderedDict(items) if ordered else dict(items)


class ResultTable(object):
    """An ordered set of ResultRows sharing one column contract."""

    def __init__(self, headers, rows=None):
        self.headers = list(headers)
        self._rows = []
        for row in rows or []:
            self.append(row)

    def __repr__(self):
        return '<ResultTable columns={} size={}>'.format(len(self.headers), len(self))

    def __len__(self):
        return len(self._rows)

    def __iter__(self):
        return iter(self._rows)

    def __getitem__(self, key):
        return self._rows[key]

    def append(self, values):
        """Adds a row given as a sequence in header order or as a mapping."""
        if isinstance(values, dict):
            values = [values[h] for h in self.headers]
        elif isinstance(values, ResultRow):
            values = values.values()
        self._rows.append(ResultRow(self.headers, values))

    def extend(self, rows):
        for row in rows:
            self.append(row)

    def column(self, key):
        return [row[key] for row in self._rows]

    @property
    def dataset(self):
        """A Tablib Dataset representation of the table."""
        data = tablib.Dataset()
        data.headers = self.headers
        for row in self._rows:
            data.append(tuple(_format_cell(v) for v in row.values()))
        return data

    def export(self, format, **kwargs):
        """Export the table to a given format (courtesy of Tablib)."""
        return self.dataset.export(format, **kwargs)


class TestReport(Munch):
    """Outcome of one verification.

    Attributes:
        name (str): what was checked
        passed (bool): verdict
        statistic (float): the quantity compared against ``threshold``
        threshold (float): acceptance bound for ``statistic``
        n_samples (int): Monte Carlo sample count (0 when exact)
        manifest (dict): seed, stream range and anything else needed to rerun
    """
    __test__ = False

    def __init__(self, name, passed, statistic, threshold, n_samples=0, manifest=None, **details):
        super(TestReport, self).__init__()
        self.name = name
        self.passed = bool(passed)
        self.statistic = plain(statistic)
        self.threshold = plain(threshold)
        self.n_samples = int(n_samples)
        self.manifest = plain(manifest or {})
        for key, value in details.items():
            self[key] = plain(value)

    def __repr__(self):
        return '<TestReport {} passed={} statistic={!r} threshold={!r}>'.format(
            self.name, self.passed, self.statistic, self.threshold)

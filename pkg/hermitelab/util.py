# coding: utf-8
from __future__ import absolute_import, division, print_function

import datetime
import hashlib
import json
import re
from collections import OrderedDict


def format_timedelta(delta, granularity='millisecond', threshold=.85):
    """Renders a duration (seconds or timedelta) as '3 seconds', '250 milliseconds'..."""
    TIME_INTERVALS = OrderedDict([
        ("year", 3600 * 24 * 365),
        ("month", 3600 * 24 * 30),
        ("week", 3600 * 24 * 7),
        ("day", 3600 * 24),
        ("hour", 3600),
        ("minute", 60),
        ("second", 1),
        ("millisecond", 1e-3),
    ])

    if isinstance(delta, datetime.datetime):
        delta = datetime.datetime.utcnow() - delta
    if isinstance(delta, datetime.timedelta):
        seconds = delta.total_seconds()
    else:
        seconds = delta

    for unit in TIME_INTERVALS:
        secs_per_unit = TIME_INTERVALS[unit]
        value = abs(seconds) / secs_per_unit
        if value >= threshold or unit == granularity:
            if unit == granularity and value > 0:
                value = max(1, value)
            value = int(round(value))
            rv = u'%s %s' % (value, unit)
            if value != 1:
                rv += u's'
            return rv
    return u''


_CONFIG_LINE = re.compile(r'''
        ^\s*
        (?:
            (?P<key>[A-Za-z_][\w.]*)
            \s*=\s*
            (?P<value>[^#]*?)
        )?
        \s*
        (?:\#.*)?
        $
        ''', re.X)


def parse_config_line(line):
    """Splits a ``key = value  # comment`` line.

    Returns:
        tuple: (key, value) with surrounding blanks removed, or None for a
        blank or comment-only line.

    Raises:
        ValueError: if the line is neither.
    """
    m = _CONFIG_LINE.match(line)
    if m is None:
        raise ValueError("Could not parse config line '%s'" % line.rstrip())
    if m.group('key') is None:
        return None
    return m.group('key'), m.group('value').strip()


def split_list(value):
    """Comma-separated items with blanks removed; empty input gives []."""
    return [item.strip() for item in value.split(',') if item.strip()]


def canonical_json(obj):
    """JSON text with sorted keys, the form hashed into manifests."""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()

# coding: utf-8
"""Experiment configuration: a flat ``key = value`` text file.

Example::

    # Rosenblatt process, two times
    q = 2
    H = 0.7
    grid.n_cells = 256
    times = 0.5, 1.0
    n_samples = 10000
"""
from __future__ import absolute_import, division, print_function

import codecs
import os
from collections import OrderedDict

from munch import Munch

from hermitelab import __version__
from hermitelab.errors import ConfigError
from hermitelab.hermite_kernels import QuadSettings
from hermitelab.special_params import make_params, truncation_for
from hermitelab.util import config_hash, parse_config_line, split_list
from hermitelab.wiener_grid import build_grid


def _to_bool(text):
    lowered = text.lower()
    if lowered in ('true', 'yes', 'on', '1'):
        return True
    if lowered in ('false', 'no', 'off', '0'):
        return False
    raise ValueError('expected a boolean, got %r' % text)


def _to_pairs(text):
    pairs = []
    for item in split_list(text):
        left, sep, right = item.partition(':')
        if not sep:
            raise ValueError('pairs are written s:t, got %r' % item)
        pairs.append([float(left), float(right)])
    return pairs


#: key -> (converter, default); defaults are given as text, like the file.
SCHEMA = OrderedDict([
    ('q', (int, '2')),
    ('H', (float, '0.7')),
    ('grid.M', (float, '1.5')),
    ('grid.x_max', (float, '2.5')),
    ('grid.n_cells', (int, '256')),
    ('grid.tail_tol', (float, '1e-4')),
    ('grid.tail_ratio', (float, '1.25')),
    ('times', (lambda v: [float(x) for x in split_list(v)], '0.5, 1.0')),
    ('pairs', (_to_pairs, '0.5:1.0')),
    ('n_samples', (int, '1000')),
    ('alpha', (float, '0.01')),
    ('seed', (int, '20240601')),
    ('quad.nodes', (int, '12')),
    ('quad.ratio', (float, '0.35')),
    ('quad.tol', (float, '1e-9')),
    ('quad.split', (_to_bool, 'true')),
    ('threads', (int, '1')),
    ('batch_size', (int, '256')),
    ('q_max', (int, '3')),
    ('scale', (float, '2.0')),
    ('shift', (float, '0.5')),
    ('level', (int, '2')),
    ('floor', (float, '1e-12')),
    ('refine.n_cells', (lambda v: [int(x) for x in split_list(v)], '128, 256, 512')),
    ('cache_dir', (str, '')),
    ('out_dir', (str, 'results')),
])


def parse_config(text):
    """Parses and validates config text.

    Returns:
        Munch: every schema key (defaults filled in) plus the derived
        ``params``, ``grid`` and ``quad`` objects.

    Raises:
        ConfigError: with the line number and key of the first problem.
    """
    raw = Munch((key, default) for key, (_, default) in SCHEMA.items())
    lines = {}
    for number, line in enumerate(text.splitlines(), 1):
        try:
            parsed = parse_config_line(line)
        except ValueError as e:
            raise ConfigError(str(e), line=number)
        if parsed is None:
            continue
        key, value = parsed
        if key not in SCHEMA:
            raise ConfigError('unknown key', line=number, key=key)
        if key in lines:
            raise ConfigError('duplicate key (first set on line %d)' % lines[key], line=number, key=key)
        lines[key] = number
        raw[key] = value

    config = Munch()
    for key, (convert, _) in SCHEMA.items():
        try:
            config[key] = convert(raw[key])
        except ValueError as e:
            raise ConfigError('invalid value %r (%s)' % (raw[key], e), line=lines.get(key), key=key)
    validate(config, lines)
    return config


def _check_derived_times(config, fail):
    """Times the experiments derive from ``times`` and ``pairs`` must lie on the grid too."""
    grid = config.grid
    pair_times = [t for pair in config['pairs'] for t in pair]
    for t in config['times'] + pair_times:
        if not grid.contains(config['scale'] * t):
            fail('scaled time %r * %r lies outside the grid' % (config['scale'], t), 'scale')
    shift = config['shift']
    for t in [0.0] + config['times'] + pair_times:
        if not grid.contains(t + shift):
            fail('shifted time %r + %r lies outside the grid' % (t, shift), 'shift')
    time_grid = [0.0] + config['times']
    j = config['level']
    t_prev, t_j = time_grid[j - 1], time_grid[j]
    if t_j > t_prev:
        for t in time_grid[:j]:
            rescaled = (t - t_prev) / (t_j - t_prev)
            if not grid.contains(rescaled):
                fail('rescaled time %r lies outside the grid' % rescaled, 'level')


def validate(config, lines=None):
    """Checks ranges and builds the derived objects in place."""
    lines = lines or {}

    def fail(message, key):
        raise ConfigError(message, line=lines.get(key), key=key)

    if config['q'] < 1:
        fail('order q must be >= 1', 'q')
    if not 0.0 < config['H'] < 1.0:
        fail('H must lie in (0, 1), got %r' % config['H'], 'H')
    # H <= 1/2 is only meaningful for the Gaussian oracle
    config.params = make_params(config['q'], config['H']) if config['H'] > 0.5 else None
    if config['q'] > config['q_max']:
        fail('order q = %d exceeds q_max = %d' % (config['q'], config['q_max']), 'q')
    if not 0.0 <= config['grid.tail_tol'] < 1.0:
        fail('tail tolerance must lie in [0, 1)', 'grid.tail_tol')
    far = None
    if config.params is not None and config['grid.tail_tol'] > 0:
        far = truncation_for(config.params, config['grid.tail_tol'])
    try:
        config.grid = build_grid(config['grid.M'], config['grid.x_max'], config['grid.n_cells'],
                                 far=far, tail_ratio=config['grid.tail_ratio'])
    except ConfigError as e:
        fail(e.reason, e.key)

    for t in config['times']:
        if not config.grid.contains(t):
            fail('time %r lies outside the grid' % t, 'times')
    for s, t in config['pairs']:
        if not (config.grid.contains(s) and config.grid.contains(t)):
            fail('pair %r:%r lies outside the grid' % (s, t), 'pairs')
    if not config['scale'] > 0:
        fail('scale must be positive', 'scale')
    if not 1 <= config['level'] <= len(config['times']):
        fail('level must lie in [1, %d]' % len(config['times']), 'level')
    if config.params is not None:
        _check_derived_times(config, fail)
    for key in ('n_samples', 'threads', 'batch_size', 'quad.nodes', 'level'):
        if config[key] < 1:
            fail('must be >= 1', key)
    if not 0 < config['alpha'] < 1:
        fail('alpha must lie in (0, 1)', 'alpha')
    if not 0 < config['quad.ratio'] < 1:
        fail('grading ratio must lie in (0, 1)', 'quad.ratio')
    if not config['quad.tol'] > 0:
        fail('tolerance must be positive', 'quad.tol')
    if config['seed'] < 0 or config['seed'] >= 2 ** 64:
        fail('seed must be an unsigned 64-bit integer', 'seed')
    if any(n < 2 for n in config['refine.n_cells']):
        fail('grid sizes must be >= 2', 'refine.n_cells')
    config.quad = QuadSettings(config['quad.nodes'], config['quad.ratio'], config['quad.tol'],
                               config['quad.split'])
    return config


def load_config(path=None):
    """Reads a config file; falls back to $HERMITELAB_CONFIG, then to the defaults."""
    path = path or os.getenv('HERMITELAB_CONFIG', None)
    if not path:
        return parse_config('')
    if not os.path.isfile(path):
        raise ConfigError("config file '%s' not found" % path)
    with codecs.open(path, 'r', 'utf-8') as file_handle:
        return parse_config(file_handle.read())


def override(config, **values):
    """A copy of ``config`` with some keys replaced and re-validated."""
    updated = Munch((key, config[key]) for key in SCHEMA)
    for key, value in values.items():
        if value is not None:
            updated[key.replace('__', '.')] = value
    return validate(updated)


#: Keys that change how a run executes but never what it computes.
RUNTIME_KEYS = frozenset(['threads', 'cache_dir', 'out_dir'])


def resolved(config):
    """The schema keys of a config as plain JSON-ready values, runtime keys left out."""
    return OrderedDict((key, config[key]) for key in SCHEMA if key not in RUNTIME_KEYS)


def manifest(config, subcommand, **extra):
    """Everything needed to rerun a subcommand; wall-clock time is kept out."""
    data = OrderedDict([
        ('subcommand', subcommand),
        ('tool_version', __version__),
        ('config_hash', config_hash(resolved(config))),
        ('config', resolved(config)),
    ])
    data.update(extra)
    return data

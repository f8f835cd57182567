# coding: utf-8
from __future__ import absolute_import, division, print_function

import os
import shutil
import tempfile
import unittest
from unittest import mock

from hermitelab.config import load_config, manifest, override, parse_config, resolved
from hermitelab.errors import ConfigError
from hermitelab.special_params import truncation_for

SMALL = """
# first-order process on a coarse grid
q = 1
H = 0.7          # index
grid.M = 4.0
grid.n_cells = 32
times = 0.5, 1.0
pairs = 0.5:1.0, 0.25:1
"""


class ParseConfigTests(unittest.TestCase):

    def assertConfigError(self, text, line, key):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(text)
        self.assertEqual(line, ctx.exception.line)
        self.assertEqual(key, ctx.exception.key)
        return ctx.exception

    def test_defaults(self):
        config = parse_config('')
        self.assertEqual(2, config['q'])
        self.assertEqual(0.7, config['H'])
        self.assertEqual(256, config.grid.n_window)
        self.assertEqual(-1.5, config.grid.x_min)
        self.assertEqual(1.0 / 64, config.grid.delta)
        self.assertGreater(config.grid.n_tail, 0)
        self.assertAlmostEqual(-truncation_for(config.params, 1e-4), config.grid.x_far, places=3)
        self.assertAlmostEqual(0.85, config.params.H0, places=14)
        self.assertEqual([0.5, 1.0], config['times'])
        self.assertEqual([128, 256, 512], config['refine.n_cells'])
        self.assertTrue(config.quad.split)
        self.assertEqual('', config['cache_dir'])

    def test_values_comments_and_lists(self):
        config = parse_config(SMALL)
        self.assertEqual(1, config.params.q)
        self.assertEqual(32, config.grid.n_window)
        self.assertEqual([[0.5, 1.0], [0.25, 1.0]], config['pairs'])

    def test_when_key_is_unknown_then_line_and_key_are_reported(self):
        error = self.assertConfigError('q = 2\nfoo = 1\n', 2, 'foo')
        self.assertIn("line 2, key 'foo'", str(error))

    def test_when_key_repeats_then_the_second_line_is_reported(self):
        error = self.assertConfigError('q = 2\nH = 0.7\nq = 3\n', 3, 'q')
        self.assertIn('first set on line 1', str(error))

    def test_when_line_cannot_be_parsed_then_only_the_line_is_reported(self):
        self.assertConfigError('q = 2\n= 3\n', 2, None)

    def test_when_value_does_not_convert_then_raises(self):
        self.assertConfigError('q = two', 1, 'q')
        self.assertConfigError('\nquad.split = maybe', 2, 'quad.split')
        self.assertConfigError('pairs = 0.5', 1, 'pairs')

    def test_range_checks_name_their_key(self):
        self.assertConfigError('H = 1.2', 1, 'H')
        self.assertConfigError('q = 0', 1, 'q')
        self.assertConfigError('q = 4', 1, 'q')
        self.assertConfigError('grid.n_cells = 1', 1, 'grid.n_cells')
        self.assertConfigError('grid.M = -1', 1, 'grid.M')
        self.assertConfigError('times = 0.5, 3.0', 1, 'times')
        self.assertConfigError('pairs = 0.5:-11', 1, 'pairs')
        self.assertConfigError('alpha = 1', 1, 'alpha')
        self.assertConfigError('n_samples = 0', 1, 'n_samples')
        self.assertConfigError('seed = -1', 1, 'seed')
        self.assertConfigError('quad.ratio = 1.5', 1, 'quad.ratio')
        self.assertConfigError('refine.n_cells = 1, 64', 1, 'refine.n_cells')
        self.assertConfigError('grid.tail_tol = 1.5', 1, 'grid.tail_tol')
        self.assertConfigError('grid.tail_ratio = 1.0', 1, 'grid.tail_ratio')
        self.assertConfigError('level = 3', 1, 'level')

    def test_zero_tail_tolerance_drops_the_far_field(self):
        config = parse_config('grid.tail_tol = 0')
        self.assertEqual(0, config.grid.n_tail)
        self.assertEqual(256, config.grid.n_cells)

    def test_when_a_scaled_time_leaves_the_grid_then_scale_is_reported(self):
        self.assertConfigError('times = 1.0, 2.0', None, 'scale')
        self.assertConfigError('pairs = 0.5:1.5\nscale = 2.0', 2, 'scale')

    def test_when_a_shifted_time_leaves_the_grid_then_shift_is_reported(self):
        self.assertConfigError('shift = 2.0', 1, 'shift')

    def test_when_a_rescaled_past_time_leaves_the_grid_then_level_is_reported(self):
        self.assertConfigError('grid.M = 0.5', None, 'level')

    def test_derived_times_are_not_checked_for_the_gaussian_oracle(self):
        config = parse_config('H = 0.5\ntimes = 1.0, 2.0')
        self.assertIsNone(config.params)

    def test_index_at_most_one_half_leaves_no_process(self):
        config = parse_config('H = 0.5')
        self.assertIsNone(config.params)
        self.assertEqual(0.5, config['H'])


class LoadConfigTests(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.path = os.path.join(self.directory, 'lab.conf')
        with open(self.path, 'w') as handle:
            handle.write(SMALL)

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_reads_a_file(self):
        self.assertEqual(32, load_config(self.path).grid.n_window)

    def test_falls_back_to_the_environment(self):
        with mock.patch.dict(os.environ, {'HERMITELAB_CONFIG': self.path}):
            self.assertEqual(1, load_config().params.q)

    def test_without_a_path_uses_the_defaults(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(2, load_config()['q'])

    def test_when_file_is_missing_then_raises(self):
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.directory, 'missing.conf'))


class OverrideTests(unittest.TestCase):

    def test_replaces_and_revalidates(self):
        config = parse_config(SMALL)
        finer = override(config, grid__n_cells=64, seed=None)
        self.assertEqual(64, finer.grid.n_window)
        self.assertEqual(config.grid.n_tail, finer.grid.n_tail)
        self.assertEqual(config['seed'], finer['seed'])
        self.assertEqual(32, config.grid.n_window)
        with self.assertRaises(ConfigError):
            override(config, threads=0)

    def test_manifest_leaves_runtime_keys_out_and_hashes_the_rest(self):
        config = parse_config(SMALL)
        first = manifest(config, 'simulate')
        second = manifest(override(config, threads=4, out_dir='elsewhere'), 'simulate')
        self.assertEqual(first, second)
        self.assertNotIn('threads', first['config'])
        self.assertNotIn('out_dir', resolved(config))
        self.assertNotEqual(first['config_hash'], manifest(override(config, seed=1), 'simulate')['config_hash'])
        self.assertEqual('simulate', first['subcommand'])

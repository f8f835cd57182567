# coding: utf-8
from __future__ import absolute_import, division, print_function

import unittest

import numpy as np

from hermitelab.results import ResultRow, ResultTable, TestReport, plain


class ResultTableTests(unittest.TestCase):

    def setUp(self):
        self.table = ResultTable(['stream_id', 'value', 'passed'])
        self.table.append([0, 1.0 / 3.0, True])
        self.table.append({'stream_id': 1, 'value': np.float64(0.1), 'passed': np.bool_(False)})

    def test_rows_are_looked_up_by_index_name_or_attribute(self):
        row = self.table[0]
        self.assertEqual(0, row[0])
        self.assertEqual(1.0 / 3.0, row['value'])
        self.assertTrue(row.passed)
        self.assertIsNone(row.get('missing'))
        with self.assertRaises(KeyError):
            row['missing']
        with self.assertRaises(AttributeError):
            row.missing

    def test_values_become_builtin_types(self):
        row = self.table[1]
        self.assertIs(type(row['value']), float)
        self.assertIs(type(row['passed']), bool)
        self.assertEqual({'stream_id': 1, 'value': 0.1, 'passed': False}, row.as_dict())
        self.assertEqual(['stream_id', 'value', 'passed'], list(row.as_dict(ordered=True)))

    def test_columns_and_rows(self):
        self.assertEqual(2, len(self.table))
        self.assertEqual([0, 1], self.table.column('stream_id'))
        copy = ResultTable(self.table.headers, rows=list(self.table))
        self.assertEqual(self.table.column('value'), copy.column('value'))

    def test_csv_keeps_every_bit_of_a_float(self):
        csv = self.table.export('csv')
        lines = csv.splitlines()
        self.assertEqual('stream_id,value,passed', lines[0])
        self.assertIn('0.3333333333333333', lines[1])
        self.assertEqual(3, len(lines))

    def test_when_row_length_differs_then_fails(self):
        with self.assertRaises(AssertionError):
            ResultRow(['a', 'b'], [1])


class PlainTests(unittest.TestCase):

    def test_converts_nested_numpy_values(self):
        value = plain({'a': np.arange(3), 'b': (np.float32(0.5), np.int64(2)), 'c': 'text'})
        self.assertEqual({'a': [0, 1, 2], 'b': [0.5, 2], 'c': 'text'}, value)
        self.assertIs(type(value['b'][1]), int)


class TestReportTests(unittest.TestCase):

    def test_fields_and_details(self):
        report = TestReport('covariance', np.bool_(True), np.float64(0.5), 1.0, 10,
                            {'seed': np.int64(3)}, extra=np.array([1.0, 2.0]))
        self.assertEqual('covariance', report.name)
        self.assertIs(report.passed, True)
        self.assertEqual(0.5, report.statistic)
        self.assertEqual({'seed': 3}, report.manifest)
        self.assertEqual([1.0, 2.0], report['extra'])
        self.assertEqual(10, report.n_samples)

    def test_is_not_collected_as_a_test(self):
        self.assertFalse(TestReport.__test__)

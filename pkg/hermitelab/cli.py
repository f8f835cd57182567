# coding: utf-8
from __future__ import absolute_import, division, print_function

import io
import json
import logging
import os
import sys
from collections import OrderedDict
from timeit import default_timer as timer

from docopt import DocoptExit, docopt

from hermitelab import __version__, experiments
from hermitelab.config import load_config, manifest, override
from hermitelab.errors import ConfigError, DomainError, NumericError, ResourceError
from hermitelab.results import ResultTable, plain
from hermitelab.simulator import Laboratory
from hermitelab.util import format_timedelta

#: Bumped whenever a subcommand's CSV columns change.
CSV_SCHEMA_VERSION = 2

EXIT_PASS = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SUBCOMMANDS = OrderedDict([
    ('simulate', 'raw Z_t samples at the configured times'),
    ('validate-cov', 'covariance against fractional Brownian motion, and E[Z_1^2] = 1'),
    ('validate-ss', 'self-similarity, KS per time'),
    ('validate-si', 'stationary increments and sign symmetry, KS per time'),
    ('malliavin-ss', 'scaling and shift invariance of <DZ_s, DZ_t>'),
    ('gram-det', 'projection determinant against LU elimination, per sample'),
    ('slnd', 'residual dominance, pathwise residual inequality and adapted bound'),
    ('det-positivity', 'Malliavin determinants at or below the floor'),
    ('chaos-tests', 'isometry, product formula and Hermite identity'),
    ('oracle', 'exact Gaussian (q = 1) determinant and conditional variances'),
    ('refine', 'grid-refinement study of E[Z_1^2]'),
    ('expected-inner', 'mean of <DZ_s, DZ_t> against its closed form'),
    ('positivity', 'unit-interval derivative norm and proportional pairs'),
    ('constants', 'the normalizing-constant identity, no sampling'),
])

COLUMN_DOCS = {
    'stream_id': 'Wiener stream index under the manifest seed',
    'stream_id_x': 'stream of the dominating sample',
    'stream_id_y': 'stream of the dominated sample',
    's': 'first time', 't': 'second time', 'k': 'position in the sorted times',
    'target': 'continuum value', 'discrete_target': 'exact value of the discretized process',
    'estimate': 'Monte Carlo mean', 'stderr': 'standard error of the mean',
    'tolerance': 'accepted absolute deviation', 'passed': 'verdict of the row',
    'check': 'what the row compares', 'statistic': 'KS distance, or relative gap when deterministic',
    'p_value': 'KS p-value (empty when deterministic)', 'threshold': 'Bonferroni level or accepted gap',
    'level': 'index j of the time t_j', 'lhs': 'residual of DZ_t off the past derivatives',
    'rhs': 'residual of the last increment derivative off the past differences',
    'violated': 'lhs below rhs beyond slack', 'x': 'projection residual', 'y': 'scaled unit-interval norm',
    'residual': 'residual of DZ_1 off the rescaled past', 'unit_interval_norm': 'squared norm of DZ_1 on [0, 1]',
    'at_floor': 'value at or below the floor', 'proportional_ratio': 'det / trace^2 of (Z_t, c Z_t)',
    'distinct_ratio': 'det / trace^2 of (Z_s, Z_t)', 'det_projection': 'product of projection residuals',
    'det_elimination': 'determinant by LU elimination', 'relative_gap': 'relative determinant gap',
    'det': 'Malliavin determinant', 'floor': 'scale-aware floor of the sample',
    'conditional_variance': 'Var(Z_k | Z_1..Z_(k-1))', 'last_only_variance': 'Var(Z_k | Z_(k-1))',
    'spacing_power': '(t_k - t_(k-1))^2H', 'ratio': 'conditional variance over spacing power',
    'n_cells': 'uniform window cells', 'delta': 'window cell width', 'exact_variance': 'exact E[Z_1^2] on the grid',
    'variance_gap': '|exact_variance - 1|', 'mc_variance': 'Monte Carlo E[Z_1^2]',
    'mc_stderr': 'standard error of mc_variance', 'hermite_gap': 'mean-square second-order Hermite gap',
    'product_gap': 'mean-square gap of I_1(f)^2 = I_2(f x f) + |f|^2',
    'q': 'chaos order', 'H': 'self-similarity index', 'value': 'left side of the identity',
    'relative_error': 'relative deviation from q', 'name': 'report name', 'n_samples': 'Monte Carlo samples',
}

cli_docs = """hermitelab: a numerical laboratory for Hermite processes.

Usage:
  hermitelab <subcommand> [--config=<path>] [--out=<dir>] [--threads=<n>] [--seed=<u64>] [--verbose]
  hermitelab (-h | --help)
  hermitelab --version

Options:
  -h --help         Show this screen.
  --version         Show the version.
  --config=<path>   Experiment configuration. Defaults to $HERMITELAB_CONFIG.
  --out=<dir>       Output directory, overrides out_dir.
  --threads=<n>     Worker threads, overrides threads.
  --seed=<u64>      Master seed, overrides seed.
  --verbose         Log debug messages.

Subcommands:
%(subcommands)s

Notes:
  - Every subcommand writes <out>/<subcommand>.csv, <out>/<subcommand>.json
    and <out>/<subcommand>.timing.json. Subcommands with several reports
    write a summary to <subcommand>.csv and the rows of each report to
    <subcommand>.<report>.csv. Only the timing file changes between
    identical runs.
  - Exit status: 0 all checks passed, 1 a check failed, 2 configuration
    error, 3 numeric error.
""" % dict(subcommands='\n'.join('  %-16s%s' % item for item in SUBCOMMANDS.items()))


def describe(header):
    if header.startswith('residual_sq_'):
        return 'squared projection residual at level %s' % header[len('residual_sq_'):]
    if header.startswith('Z('):
        return 'process value at time %s' % header[2:-1]
    return COLUMN_DOCS.get(header, '')


def _run_experiments(subcommand, config, logger, verbose):
    """Returns (reports, laboratory or None)."""
    n = config['n_samples']
    times, pairs = config['times'], config['pairs']

    if subcommand == 'oracle':
        return [experiments.gaussian_oracle(config['H'], times)], None
    if subcommand == 'constants':
        q_values = sorted({1, 2, 3, config['q']})
        H_values = sorted({0.55, 0.7, 0.9} | ({config['H']} if config['H'] > 0.5 else set()))
        return [experiments.constant_identity(q_values, H_values)], None

    lab = Laboratory(config, logger)
    lab.verbose = verbose
    time_grid = [0.0] + list(times)

    if subcommand == 'simulate':
        reports = [experiments.simulate(lab, times, n)]
    elif subcommand == 'validate-cov':
        reports = [experiments.covariance_validation(lab, times, n),
                   experiments.normalization_test(lab, n, first_stream=n)]
    elif subcommand == 'validate-ss':
        reports = [experiments.self_similarity_test(lab, config['scale'], times, n, config['alpha'])]
    elif subcommand == 'validate-si':
        reports = [experiments.stationary_increments_test(lab, config['shift'], times, n, config['alpha'])]
    elif subcommand == 'malliavin-ss':
        reports = [experiments.malliavin_selfsim_test(lab, config['scale'], pairs, n, config['alpha'],
                                                      config['shift'])]
    elif subcommand == 'gram-det':
        reports = [experiments.gram_determinant_check(lab, times, n)]
    elif subcommand == 'slnd':
        reports = [experiments.slnd_dominance_test(lab, time_grid, config['level'], n, config['alpha']),
                   experiments.pathwise_residual_inequality(lab, time_grid, n, first_stream=2 * n),
                   experiments.adapted_residual_bound(lab, time_grid, config['level'], n, first_stream=3 * n)]
    elif subcommand == 'det-positivity':
        reports = [experiments.det_positivity_experiment(lab, times, n, config['floor'])]
    elif subcommand == 'chaos-tests':
        reports = experiments.chaos_suite(lab, n)
    elif subcommand == 'refine':
        reports = [experiments.refinement_study(lab, config['refine.n_cells'], n)]
    elif subcommand == 'expected-inner':
        reports = [experiments.expected_inner_test(lab, pairs, n)]
    elif subcommand == 'positivity':
        s, t = pairs[0]
        reports = [experiments.unit_interval_positivity(lab, n, config['floor']),
                   experiments.pair_proportionality_check(lab, s, t, n, first_stream=n)]
    else:
        raise ConfigError("unknown subcommand '%s'" % subcommand)
    return reports, lab


def _summary_table(reports):
    table = ResultTable(['name', 'passed', 'statistic', 'threshold', 'n_samples'])
    for report in reports:
        table.append([report.name, report.passed, report.statistic, report.threshold, report.n_samples])
    return table


def _table_files(subcommand, reports, tables):
    """File name -> table for every CSV a run writes.

    A single report with rows writes ``<subcommand>.csv``. Otherwise that file
    holds the summary and every report with rows gets ``<subcommand>.<name>.csv``.
    """
    if len(reports) == 1 and tables[0] is not None:
        return OrderedDict([(subcommand + '.csv', tables[0])])
    files = OrderedDict([(subcommand + '.csv', _summary_table(reports))])
    for report, table in zip(reports, tables):
        if table is None:
            continue
        name, k = report.name, 1
        while '%s.%s.csv' % (subcommand, name) in files:
            k += 1
            name = '%s_%d' % (report.name, k)
        files['%s.%s.csv' % (subcommand, name)] = table
    return files


def _write(path, text):
    with io.open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(text)


def run(subcommand, config_path=None, out=None, threads=None, seed=None, verbose=False, logger=None):
    """Runs one subcommand and writes its files.

    Returns:
        int: EXIT_PASS or EXIT_FAILED.

    Raises:
        ConfigError: on an unknown subcommand or an invalid configuration.
        NumericError: when kernel quadrature fails.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError("unknown subcommand '%s'" % subcommand)
    config = load_config(config_path)
    config = override(config, out_dir=out, threads=threads, seed=seed)

    start = timer()
    reports, lab = _run_experiments(subcommand, config, logger, verbose)
    elapsed = timer() - start

    tables = [report.pop('table', None) for report in reports]
    files = _table_files(subcommand, reports, tables)
    columns = OrderedDict()
    for table in files.values():
        for header in table.headers:
            columns.setdefault(header, describe(header))
    passed = all(report.passed for report in reports)

    summary = OrderedDict([
        ('subcommand', subcommand),
        ('manifest', manifest(config, subcommand, csv_schema_version=CSV_SCHEMA_VERSION,
                              tests=[{'name': r.name, 'manifest': r.manifest} for r in reports])),
        ('files', OrderedDict((name, list(table.headers)) for name, table in files.items())),
        ('columns', columns),
        ('reports', [plain(dict(report)) for report in reports]),
        ('passed', passed),
    ])
    timing = OrderedDict([
        ('subcommand', subcommand),
        ('elapsed_seconds', elapsed),
        ('elapsed', format_timedelta(elapsed)),
        ('kernels_built', lab.cache.kernels_built if lab else 0),
        ('kernels_loaded', lab.cache.kernels_loaded if lab else 0),
        ('samples_drawn', lab.samples_drawn if lab else 0),
    ])

    out_dir = config['out_dir']
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    base = os.path.join(out_dir, subcommand)
    for name, table in files.items():
        _write(os.path.join(out_dir, name), table.export('csv'))
    _write(base + '.json', json.dumps(summary, sort_keys=True, indent=2) + '\n')
    _write(base + '.timing.json', json.dumps(timing, sort_keys=True, indent=2) + '\n')

    if logger:
        for report in reports:
            logger.info('%s: %s (statistic %r, threshold %r)'
                        % (report.name, 'passed' if report.passed else 'FAILED', report.statistic,
                           report.threshold))
        logger.info('%s finished in %s, results in %s' % (subcommand, format_timedelta(elapsed), out_dir))
    return EXIT_PASS if passed else EXIT_FAILED


def _integer(arguments, flag, key):
    value = arguments[flag]
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigError('%s expects an integer, got %r' % (flag, value), key=key)


def cli(argv=None):
    try:
        arguments = docopt(cli_docs, argv=argv, version='hermitelab %s' % __version__)
    except DocoptExit as e:
        print(e, file=sys.stderr)
        sys.exit(EXIT_CONFIG)

    verbose = arguments['--verbose']
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logger = logging.getLogger('hermitelab')

    try:
        status = run(arguments['<subcommand>'], arguments['--config'], arguments['--out'],
                     _integer(arguments, '--threads', 'threads'), _integer(arguments, '--seed', 'seed'),
                     verbose, logger)
    except (ConfigError, DomainError, ResourceError) as e:
        logger.error('configuration error: %s' % e)
        sys.exit(EXIT_CONFIG)
    except NumericError as e:
        logger.error('numeric error: %s %s' % (e, json.dumps(plain(dict(e.diagnostics)), sort_keys=True)))
        sys.exit(EXIT_NUMERIC)
    sys.exit(status)


# Run the CLI when executed directly.
if __name__ == '__main__':
    cli()

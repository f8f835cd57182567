# coding: utf-8
from __future__ import absolute_import, division, print_function

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from hermitelab.config import override
from hermitelab.errors import ConfigError
from hermitelab.hermite_kernels import DerivativeVector, check_time, derivative_batch, process_batch
from hermitelab.kernel_cache import KernelCache
from hermitelab.special_params import truncation_tail
from hermitelab.wiener_grid import sample_batch


class Laboratory(object):
    """Simulation helper bound to one validated configuration.

    Holds the parameters, grid, seed and quadrature settings of an experiment
    together with the kernel cache, and runs per-stream work in batches.

    Batches have ``batch_size`` streams whatever the number of threads, and
    their results are concatenated in stream order, so every array a
    Laboratory returns depends only on the configuration.

    Args:
        config (Munch): output of :func:`hermitelab.config.parse_config`
        logger (logging.Logger, optional): receives progress messages
        cache (KernelCache, optional): shared kernel cache; a new one is made
            from ``config.cache_dir`` otherwise.
    """

    def __init__(self, config, logger=None, cache=None):
        if config.params is None:
            raise ConfigError('Hermite processes need H in (1/2, 1), got %r' % config['H'], key='H')
        self.config = config
        self.params = config.params
        self.grid = config.grid
        self.quad = config.quad
        self.seed = config['seed']
        self.q_max = config['q_max']
        self.threads = config['threads']
        self.batch_size = config['batch_size']

        # The logger used for progress and timing messages.
        self.logger = logger

        #: Flag indicating whether per-batch progress is logged.
        #: Defaults to False.
        self.verbose = False

        self.cache = cache if cache is not None else KernelCache(config['cache_dir'], logger)

        #: Number of Wiener samples drawn so far.
        self.samples_drawn = 0

        #: Number of batches run so far.
        self.batches_run = 0

        tail = truncation_tail(self.params, -self.grid.x_far)
        if tail > 1e-2 and self.logger:
            self.logger.warning('truncation at %s leaves a kernel tail of %.3g per coordinate'
                                % (self.grid.x_far, tail))

    def __repr__(self):
        return '<Laboratory q={} H={} n_cells={} seed={}>'.format(
            self.params.q, self.params.H, self.grid.n_cells, self.seed)

    def with_grid(self, n_cells):
        """A Laboratory on a grid with a different cell count, sharing the cache."""
        lab = Laboratory(override(self.config, grid__n_cells=n_cells), self.logger, self.cache)
        lab.verbose = self.verbose
        return lab

    # ------------------------------------------------------------------
    # Batching
    # ------------------------------------------------------------------

    def _batches(self, stream_ids):
        stream_ids = list(stream_ids)
        return [stream_ids[k:k + self.batch_size] for k in range(0, len(stream_ids), self.batch_size)]

    def map_streams(self, fn, stream_ids):
        """Applies ``fn(increments, batch_ids)`` to every batch of streams.

        ``fn`` gets the increments matrix of a batch (one row per stream) and
        returns an array with one leading row per stream.

        Returns:
            ndarray: the batch results stacked in stream order
        """
        batches = self._batches(stream_ids)
        if not batches:
            return np.empty((0,))

        def run(batch):
            increments = sample_batch(self.grid, self.seed, batch)
            return np.asarray(fn(increments, batch))

        if self.threads > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(run, batches))
        else:
            results = [run(batch) for batch in batches]

        self.batches_run += len(batches)
        self.samples_drawn += sum(len(batch) for batch in batches)
        if self.verbose and self.logger:
            self.logger.debug('ran %d streams in %d batches on %d threads'
                              % (sum(len(b) for b in batches), len(batches), self.threads))
        return np.concatenate(results, axis=0)

    # ------------------------------------------------------------------
    # Kernels and samples
    # ------------------------------------------------------------------

    def kernel(self, t):
        """The cached cell kernel L_t."""
        check_time(self.grid, t)
        return self.cache.get(self.params, t, self.grid, self.quad, self.q_max)

    def warm(self, times):
        """Builds the kernels of ``times`` up front, outside the worker pool."""
        for t in times:
            self.kernel(t)

    def process(self, times, stream_ids):
        """Z_t samples: shape (len(stream_ids), len(times))."""
        times = list(times)
        self.warm(times)
        return self.map_streams(
            lambda x, _: process_batch(self.params, times, x, self.grid, self.quad, self.q_max, self.cache),
            stream_ids)

    def reduce_derivatives(self, times, fn, stream_ids):
        """Applies ``fn(stack, batch_ids)`` to the derivatives of each batch.

        ``stack`` has shape (batch, len(times), n_cells); ``fn`` returns one
        leading row per stream, so a batch of derivatives never has to outlive
        its reduction.
        """
        times = list(times)
        self.warm(times)

        def run(x, batch_ids):
            stack = np.stack([derivative_batch(self.params, t, x, self.grid, self.quad, self.q_max, self.cache)
                              for t in times], axis=1)
            return fn(stack, batch_ids)

        return self.map_streams(run, stream_ids)

    def derivative_stack(self, times, stream_ids):
        """Derivatives at several times: shape (len(stream_ids), len(times), n_cells)."""
        return self.reduce_derivatives(times, lambda stack, _: stack, stream_ids)

    def derivative_vectors(self, times, stream_id):
        """DerivativeVectors at ``times`` on one stream."""
        return self.vectors(self.derivative_stack(times, [stream_id])[0], times, stream_id)

    def vectors(self, stack, times, stream_id):
        """Wraps one row of :meth:`derivative_stack` output."""
        return [DerivativeVector(stack[k], t, stream_id, self.grid) for k, t in enumerate(times)]

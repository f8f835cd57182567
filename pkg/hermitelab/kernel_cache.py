# coding: utf-8
"""Per-time kernel cache, in memory and optionally on disk.

A cache file holds one dense kernel::

    HERMITELAB-KERNEL
    <format version>
    <JSON key: params, t, grid, quadrature settings>
    <array in .npy format>

A file whose header key differs from the requested key, or whose array is
truncated or unreadable, is ignored and rewritten.
"""
from __future__ import absolute_import, division, print_function

import hashlib
import io
import os
import threading
from timeit import default_timer as timer

import numpy as np

from hermitelab.chaos_core import Q_MAX, DiscretizedKernel
from hermitelab.hermite_kernels import DEFAULT_QUAD, cell_kernel
from hermitelab.util import canonical_json, format_timedelta

MAGIC = b'HERMITELAB-KERNEL'
FORMAT_VERSION = 2


def kernel_key(params, t, grid, quad):
    """The full identity of a cell kernel as a JSON-ready dict."""
    return {
        'format': FORMAT_VERSION,
        'q': int(params.q),
        'H': float(params.H),
        't': float(t),
        'grid': grid.as_dict(),
        'quad': quad.as_dict(),
    }


class KernelCache(object):
    """Builds cell kernels once per key and hands out the same object afterwards.

    Args:
        cache_dir (str, optional): directory for persisted kernels. Without it
            the cache lives in memory only.
        logger (logging.Logger, optional): receives build and load messages.
    """

    def __init__(self, cache_dir=None, logger=None):
        self.cache_dir = cache_dir or None
        self.logger = logger
        self._kernels = {}
        self._lock = threading.Lock()

        #: Kernels computed by quadrature in this process.
        self.kernels_built = 0

        #: Kernels read back from disk.
        self.kernels_loaded = 0

        if self.cache_dir and not os.path.isdir(self.cache_dir):
            os.makedirs(self.cache_dir)

    def __len__(self):
        return len(self._kernels)

    def path_for(self, key):
        digest = hashlib.sha256(canonical_json(key).encode('utf-8')).hexdigest()
        return os.path.join(self.cache_dir, digest + '.kernel')

    def get(self, params, t, grid, quad=DEFAULT_QUAD, q_max=Q_MAX):
        """Returns the dense cell kernel for (params, t, grid, quad)."""
        key = kernel_key(params, t, grid, quad)
        name = canonical_json(key)
        with self._lock:
            kernel = self._kernels.get(name)
            if kernel is None:
                kernel = self._load(key, grid) if self.cache_dir else None
                if kernel is None:
                    kernel = self._build(params, t, grid, quad, q_max)
                    if self.cache_dir:
                        self._store(key, kernel)
                self._kernels[name] = kernel
        return kernel

    def clear(self):
        """Forgets every in-memory kernel."""
        with self._lock:
            self._kernels.clear()

    def _build(self, params, t, grid, quad, q_max):
        start = timer()
        kernel = cell_kernel(params, t, grid, quad, q_max)
        self.kernels_built += 1
        if self.logger:
            self.logger.debug('built kernel q=%s H=%s t=%s n_cells=%s in %s'
                              % (params.q, params.H, t, grid.n_cells, format_timedelta(timer() - start)))
        return kernel

    def _store(self, key, kernel):
        buf = io.BytesIO()
        np.save(buf, kernel.dense(), allow_pickle=False)
        header = b'\n'.join([MAGIC, str(FORMAT_VERSION).encode('ascii'),
                             canonical_json(key).encode('utf-8')]) + b'\n'
        path = self.path_for(key)
        tmp = path + '.tmp'
        with open(tmp, 'wb') as handle:
            handle.write(header)
            handle.write(buf.getvalue())
        os.replace(tmp, path)

    def _load(self, key, grid):
        path = self.path_for(key)
        if not os.path.isfile(path):
            return None
        with open(path, 'rb') as handle:
            magic = handle.readline().rstrip(b'\n')
            version = handle.readline().rstrip(b'\n')
            stored_key = handle.readline().rstrip(b'\n')
            if (magic != MAGIC or version != str(FORMAT_VERSION).encode('ascii')
                    or stored_key != canonical_json(key).encode('utf-8')):
                if self.logger:
                    self.logger.warning('ignoring stale kernel cache file %s' % path)
                return None
            try:
                values = np.load(handle, allow_pickle=False)
            except (ValueError, EOFError, OSError) as e:
                values = None
                reason = str(e)
        if values is None or values.shape != (grid.n_cells,) * key['q']:
            if self.logger:
                self.logger.warning('ignoring unreadable kernel cache file %s (%s)'
                                    % (path, reason if values is None else 'shape %s' % (values.shape,)))
            return None
        self.kernels_loaded += 1
        if self.logger:
            self.logger.debug('loaded kernel t=%s from %s' % (key['t'], path))
        return DiscretizedKernel(values.ndim, grid, dense=values, symmetric=True)

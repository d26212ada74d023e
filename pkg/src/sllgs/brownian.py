"""Seeded Wiener paths.

A path is stored as its values ``W(t_k)`` on the base grid, not as raw
increments.  Coarsening by ``k`` keeps every ``k``-th value, so nested
coarsenings agree bit for bit and ``W(T)`` is the same at every resolution.
Path ``i`` of an ensemble is drawn from its own stream derived from
``(master_seed, i)``, which makes ensembles independent of execution order.
"""

import struct
from dataclasses import dataclass

import numpy as np

_HEADER = struct.Struct('<QdQQ')


def path_rng(master_seed, index):
    """Independent generator for path ``index`` of the ensemble ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class BrownianPath:
    seed: int
    base_dt: float
    W: np.ndarray
    path_index: int = 0

    @property
    def n_steps(self):
        return self.W.shape[0] - 1

    @property
    def dims(self):
        return self.W.shape[1]

    @property
    def increments(self):
        return np.diff(self.W, axis=0)

    @property
    def terminal(self):
        return self.W[-1]

    @property
    def times(self):
        return self.base_dt * np.arange(self.n_steps + 1)

    def coarsen(self, factor):
        return coarsen(self, factor)

    def dump(self, filename):
        """Write header ``(seed, base_dt, n_steps, dims)`` then ``W`` as <f8."""
        with open(filename, 'wb') as fh:
            fh.write(_HEADER.pack(self.seed, self.base_dt, self.n_steps, self.dims))
            fh.write(np.ascontiguousarray(self.W, dtype='<f8').tobytes())

    @classmethod
    def load(cls, filename):
        with open(filename, 'rb') as fh:
            seed, base_dt, n_steps, dims = _HEADER.unpack(fh.read(_HEADER.size))
            data = np.frombuffer(fh.read(), dtype='<f8')
        if data.size != (n_steps + 1) * dims:
            raise ValueError(f'{filename}: expected {(n_steps + 1) * dims} values, found {data.size}')
        return cls(seed, base_dt, data.reshape(n_steps + 1, dims).astype(float))


def _draw(rng, n_steps, base_dt, dims):
    dw = rng.standard_normal((n_steps, dims)) * np.sqrt(base_dt)
    W = np.zeros((n_steps + 1, dims))
    np.cumsum(dw, axis=0, out=W[1:])
    return W


def generate(seed, n_steps, base_dt, dimensions=3, path_index=0):
    """Draw a path with ``n_steps`` increments ``~ N(0, base_dt)`` per component."""
    if n_steps < 1:
        raise ValueError('n_steps must be >= 1')
    if not base_dt > 0:
        raise ValueError('base_dt must be positive')
    W = _draw(path_rng(seed, path_index), n_steps, base_dt, dimensions)
    return BrownianPath(int(seed), float(base_dt), W, int(path_index))


def coarsen_values(W, factor, axis=0):
    """Every ``factor``-th sample of a Wiener-value array along ``axis``."""
    factor = int(factor)
    n = W.shape[axis] - 1
    if factor < 1 or n % factor:
        raise ValueError(f'factor {factor} does not divide n_steps={n}')
    index = [slice(None)] * W.ndim
    index[axis] = slice(None, None, factor)
    return W[tuple(index)]


def coarsen(path, factor):
    """Path at ``factor`` times the step; increments are sums of ``factor`` base increments."""
    W = coarsen_values(path.W, factor)
    return BrownianPath(path.seed, path.base_dt * factor, W, path.path_index)


def ensemble_values(seed, n_paths, n_steps, base_dt, dimensions=3, start=0):
    """Stacked values of paths ``start .. start+n_paths-1``; shape (n_paths, n_steps+1, dims)."""
    return np.stack([_draw(path_rng(seed, start + i), n_steps, base_dt, dimensions)
                     for i in range(n_paths)])


class NoiseStream:
    """Step-by-step increments for many paths at once.

    Yields the same normal draws per path as :func:`generate` with the same
    seed and index; only the increments are produced directly instead of as
    differences of cumulative values.
    """

    def __init__(self, seed, path_indices, dt, dimensions=3, block=256):
        self.dt = float(dt)
        self.dims = dimensions
        self.block = int(block)
        self._rngs = [path_rng(seed, i) for i in path_indices]
        self._buf = None
        self._pos = self.block

    def __len__(self):
        return len(self._rngs)

    def next(self):
        """Increments for the next step, shape (n_paths, dims)."""
        if self._pos == self.block:
            self._buf = np.stack([r.standard_normal((self.block, self.dims)) for r in self._rngs], axis=1)
            self._buf *= np.sqrt(self.dt)
            self._pos = 0
        out = self._buf[self._pos]
        self._pos += 1
        return out

import zlib
import numpy as np


def _key(token):
    """ Maps a stream token (int or str) to a non-negative integer. """
    if isinstance(token, str):
        return zlib.crc32(token.encode('utf-8'))
    token = int(token)
    if token < 0:
        raise ValueError('Stream keys must be non-negative.')
    return token


class NoiseSource:
    """
    Counter-based, splittable source of random numbers. A stream is identified by a seed and a path of keys; children extend the path, so the draws for a given (seed, path) never depend on which other streams were consumed.

    Attributes:

        seed (int) - 64-bit seed

        path (tuple of int) - stream keys below the root

    """

    def __init__(self, seed, path=()):
        """
        Instantiate noise source.

        Args:

            seed (int) - 64-bit seed

            path (tuple) - stream keys (ints or strings)

        """
        self.seed = int(seed)
        self.path = tuple(_key(k) for k in path)
        self._generator = None

    def __repr__(self):
        return 'NoiseSource(seed={:d}, path={})'.format(self.seed, self.path)

    def child(self, *keys):
        """ Returns an independent stream identified by <keys> below this one. """
        return NoiseSource(self.seed, self.path + tuple(_key(k) for k in keys))

    @property
    def generator(self):
        """ Philox generator for this stream (created on first use). """
        if self._generator is None:
            sequence = np.random.SeedSequence(self.seed, spawn_key=self.path)
            self._generator = np.random.Generator(np.random.Philox(sequence))
        return self._generator

    def standard_normal(self, size=None):
        """ Returns standard normal draws. """
        return self.generator.standard_normal(size)

    def uniform(self, low=0., high=1., size=None):
        """ Returns uniform draws on [low, high). """
        return self.generator.uniform(low, high, size)

    def gumbel(self, size=None):
        """ Returns standard Gumbel draws. """
        return self.generator.gumbel(0., 1., size)

    def beta(self, a, b, size=None):
        """ Returns Beta(a, b) draws. """
        return self.generator.beta(a, b, size)

    def permutation(self, n):
        """ Returns a random permutation of range(n). """
        return self.generator.permutation(n)

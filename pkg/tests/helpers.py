"""Shared builders for the test modules."""

import numpy as np

from grouprb.channels import RandomIsometry, Superoperator, random_isometry


def random_channel(d, rng, p=None):
    """A random Stinespring channel mixed with the identity (p drawn if not given)."""
    p = rng.uniform(0, 1) if p is None else p
    return RandomIsometry(p, random_isometry(d, rng)).superoperator()


def dephasing(d):
    """Keeps the diagonal, kills everything else."""
    v = np.eye(d).reshape(-1, order="F")
    return Superoperator(np.diag(v).astype(complex), d)


class CyclicTwo:
    """Z2 = {e, a} as a stand-alone toy group (a*a = e)."""

    def __init__(self, k):
        self.k = k % 2

    def __matmul__(self, other):
        return CyclicTwo(self.k + other.k)

    def inverse(self):
        return self

    def identity(self):
        return CyclicTwo(0)

    def __eq__(self, other):
        return isinstance(other, CyclicTwo) and self.k == other.k

    def __hash__(self):
        return hash(("z2", self.k))

    def __repr__(self):
        return "a" if self.k else "e"

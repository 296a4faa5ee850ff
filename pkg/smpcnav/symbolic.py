"""Helpers shared by the numeric and the symbolic (casadi) code paths.

Model functions are written once with casadi operations. Called with
casadi symbols they return expressions used to build the OCP, called
with numbers they return numpy arrays.
"""

import casadi as ca
import numpy as np


def is_symbolic(*values):
    """True if any of the values is a casadi symbolic expression."""
    return any(isinstance(v, (ca.SX, ca.MX)) for v in values)


def to_matrix(value):
    """Convert a casadi numeric result to a 2D numpy array."""
    if isinstance(value, ca.DM):
        return value.full()
    return np.atleast_2d(np.asarray(value, dtype=float))


def to_vector(value):
    """Convert a casadi numeric result to a 1D numpy array."""
    if isinstance(value, ca.DM):
        return value.full().ravel()
    return np.asarray(value, dtype=float).ravel()


def to_scalar(value):
    if isinstance(value, ca.DM):
        return float(value.full()[0, 0])
    return float(value)


def output(value, symbolic, kind='matrix'):
    """Return ``value`` untouched for symbolic calls, as numpy otherwise."""
    if symbolic:
        return value
    return {'matrix': to_matrix,
            'vector': to_vector,
            'scalar': to_scalar}[kind](value)


def upper_indices(n):
    """Row-major (i, j) pairs with i <= j of an n x n matrix.

    >>> upper_indices(2)
    [(0, 0), (0, 1), (1, 1)]
    """
    return [(i, j) for i in range(n) for j in range(i, n)]


def symmetric_from_upper(values, n):
    """Assemble a symmetric matrix from its row-major upper triangle."""
    pairs = upper_indices(n)
    if is_symbolic(values):
        M = ca.SX(n, n)
        for idx, (i, j) in enumerate(pairs):
            M[i, j] = values[idx]
            if i != j:
                M[j, i] = values[idx]
        return M
    values = np.asarray(values, dtype=float).ravel()
    M = np.zeros((n, n))
    for idx, (i, j) in enumerate(pairs):
        M[i, j] = M[j, i] = values[idx]
    return M


def upper_from_symmetric(M):
    """Row-major upper triangle of a square matrix.

    >>> upper_from_symmetric(np.array([[1., 2.], [2., 3.]])).tolist()
    [1.0, 2.0, 3.0]
    """
    n = M.shape[0]
    if is_symbolic(M):
        return ca.vertcat(*[M[i, j] for i, j in upper_indices(n)])
    M = np.asarray(M, dtype=float)
    return np.array([M[i, j] for i, j in upper_indices(n)])


def matrix_from_rows(values, rows, cols):
    """Row-major reshape that works for casadi vectors too."""
    if is_symbolic(values):
        return ca.reshape(values, cols, rows).T
    return np.asarray(values, dtype=float).reshape(rows, cols)


def rows_from_matrix(M):
    if is_symbolic(M):
        return ca.vec(M.T)
    return np.asarray(M, dtype=float).ravel()

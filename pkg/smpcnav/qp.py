"""Convex QP subproblems of the SQP iteration.

A subproblem in the step ``d`` reads

    min  1/2 d'Hd + g'd
    s.t. c_eq + J_eq d = 0
         c_in + J_in d <= 0
         lower <= d <= upper

and is handed to OSQP as ``l <= A d <= u`` with the equality rows, the
inequality rows and one identity row per variable. OSQP multipliers are
positive on active upper bounds and negative on active lower bounds, which
matches the Lagrangian convention ``grad f + J_eq'lam + J_in'mu + nu = 0``.
"""

import logging

import numpy as np
import osqp
import scipy.sparse as sp


logger = logging.getLogger(__name__)

# OSQP statuses accepted as a solution
SOLVED = ('solved', 'solved inaccurate')
INFEASIBLE = ('primal infeasible', 'primal infeasible inaccurate')

default_settings = {
    'eps_abs': 1e-9,
    'eps_rel': 1e-9,
    'eps_prim_inf': 1e-10,
    'eps_dual_inf': 1e-10,
    'max_iter': 50000,
    'polish': True,
    'polish_refine_iter': 10,
    'verbose': False,
}


class QpStep(object):
    """Step and multipliers returned by a subproblem solve.

    Attributes:
        d (array): primal step.
        lam_eq, lam_in, lam_bounds (arrays): multipliers of the equality,
            inequality and bound rows.
        status (str): OSQP status string.
        iterations (int): OSQP iterations.
    """

    def __init__(self, d, lam_eq, lam_in, lam_bounds, status, iterations):
        self.d = d
        self.lam_eq = lam_eq
        self.lam_in = lam_in
        self.lam_bounds = lam_bounds
        self.status = status
        self.iterations = iterations


def _osqp_solve(P, q, A, l, u, settings):
    options = dict(default_settings)
    options.update(settings or {})
    prob = osqp.OSQP()
    prob.setup(sp.triu(P, format='csc'), q, sp.csc_matrix(A), l, u,
               **options)
    res = prob.solve()
    return res


def _finite(x):
    return x is not None and np.all(np.isfinite(x))


class QpSubproblem(object):
    """Linearized subproblem at one SQP iterate.

    ``H`` must be positive semi-definite. Jacobians may be dense or
    scipy sparse matrices.
    """

    def __init__(self, H, g, c_eq, J_eq, c_in, J_in, lower, upper):
        self.H = sp.csc_matrix(H)
        self.g = np.asarray(g, dtype=float)
        self.c_eq = np.asarray(c_eq, dtype=float)
        self.c_in = np.asarray(c_in, dtype=float)
        n = self.g.size
        self.J_eq = sp.csc_matrix(J_eq).reshape((self.c_eq.size, n))
        self.J_in = sp.csc_matrix(J_in).reshape((self.c_in.size, n))
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)

    @property
    def n(self):
        return self.g.size

    def with_constants(self, c_eq, c_in):
        """Same model with other constraint constants (second-order
        correction)."""
        return QpSubproblem(self.H, self.g, c_eq, self.J_eq, c_in, self.J_in,
                            self.lower, self.upper)

    def linearized_violation(self, d):
        """l1 violation of the linearized constraints at step ``d``."""
        eq = self.c_eq + self.J_eq.dot(d)
        ineq = self.c_in + self.J_in.dot(d)
        return float(np.sum(np.abs(eq)) + np.sum(np.maximum(ineq, 0.0)))

    def solve(self, settings=None):
        """Solve the subproblem, ``None`` if it is infeasible."""
        m_eq, m_in, n = self.c_eq.size, self.c_in.size, self.n
        A = sp.vstack([self.J_eq, self.J_in, sp.identity(n)], format='csc')
        l = np.concatenate([-self.c_eq, np.full(m_in, -np.inf), self.lower])
        u = np.concatenate([-self.c_eq, -self.c_in, self.upper])
        res = _osqp_solve(self.H, self.g, A, l, u, settings)
        status = res.info.status
        if status in INFEASIBLE or not _finite(res.x):
            logger.debug('QP subproblem status {}'.format(status))
            return None
        if status not in SOLVED:
            logger.debug('QP subproblem returned {}'.format(status))
        y = res.y
        return QpStep(res.x, y[:m_eq], np.maximum(y[m_eq:m_eq + m_in], 0.0),
                      y[m_eq + m_in:], status, res.info.iter)

    def solve_elastic(self, penalty, settings=None):
        """Solve the l1-elastic subproblem.

        Equalities get a positive and a negative elastic variable,
        inequalities a positive one, all penalized linearly with
        ``penalty``. The elastic problem is always feasible.
        """
        m_eq, m_in, n = self.c_eq.size, self.c_in.size, self.n
        n_el = 2 * m_eq + m_in
        P = sp.block_diag([self.H, sp.csc_matrix((n_el, n_el))],
                          format='csc')
        q = np.concatenate([self.g, np.full(n_el, float(penalty))])
        I_eq = sp.identity(m_eq)
        A_eq = sp.hstack([self.J_eq, -I_eq, I_eq,
                          sp.csc_matrix((m_eq, m_in))])
        A_in = sp.hstack([self.J_in, sp.csc_matrix((m_in, 2 * m_eq)),
                          -sp.identity(m_in)])
        A_box = sp.block_diag([sp.identity(n), sp.identity(n_el)])
        A = sp.vstack([A_eq, A_in, A_box], format='csc')
        l = np.concatenate([-self.c_eq, np.full(m_in, -np.inf),
                            self.lower, np.zeros(n_el)])
        u = np.concatenate([-self.c_eq, -self.c_in,
                            self.upper, np.full(n_el, np.inf)])
        res = _osqp_solve(P, q, A, l, u, settings)
        status = res.info.status
        if not _finite(res.x):
            logger.debug('Elastic QP status {}'.format(status))
            return None
        y = res.y
        bounds = y[m_eq + m_in:m_eq + m_in + n]
        return QpStep(res.x[:n], y[:m_eq],
                      np.maximum(y[m_eq:m_eq + m_in], 0.0),
                      bounds, status, res.info.iter)

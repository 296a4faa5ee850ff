# -*- coding: utf-8 -*-
"""Smooth nonlinear programs and a sequential quadratic programming solver.

Problems are expressed with casadi symbols. Derivatives come from casadi
algorithmic differentiation, so gradients, Jacobians and Hessians are exact
up to floating point roundoff.
"""

import copy
import enum
import logging
from timeit import default_timer as timer

import casadi as ca
import numpy as np
import scipy.sparse as sp

from smpcnav import symbolic
from smpcnav.qp import QpSubproblem


logger = logging.getLogger(__name__)


class DomainError(ValueError):
    """An evaluator returned a non-finite value."""
    pass


class SolverStatus(enum.Enum):
    CONVERGED = 'converged'
    MAX_ITER = 'max_iter'
    LINE_SEARCH_FAILURE = 'line_search_failure'
    INFEASIBLE = 'infeasible'


def _checked(value, what):
    if not np.all(np.isfinite(value)):
        raise DomainError("Non-finite {} encountered".format(what))
    return value


def to_sparse(M):
    """Convert a casadi DM to a scipy CSC matrix."""
    colind, row = M.sparsity().get_ccs()
    data = np.array(M.nonzeros(), dtype=float)
    return sp.csc_matrix((data, np.array(row), np.array(colind)),
                         shape=M.shape)


def _symbolic_evaluation(evaluator, point):
    point = np.atleast_1d(np.asarray(point, dtype=float)).ravel()
    z = ca.SX.sym('z', point.size)
    return z, point, evaluator(z)


def ad_gradient(evaluator, point):
    """Exact gradient of a scalar evaluator at ``point``.

    ``evaluator`` maps a casadi vector symbol to a scalar expression (a
    casadi ``Function`` works too).

    >>> ad_gradient(lambda z: z[0] * z[1], [3., 4.]).tolist()
    [4.0, 3.0]
    >>> ad_gradient(lambda z: ca.sqrt(z), [0.04]).tolist()
    [2.5]
    """
    z, point, f = _symbolic_evaluation(evaluator, point)
    function = ca.Function('gradient', [z], [f, ca.gradient(f, z)])
    value, gradient = function(point)
    _checked(symbolic.to_vector(value), 'evaluator value')
    return _checked(symbolic.to_vector(gradient), 'gradient')


def ad_jacobian(evaluator, point):
    """Exact Jacobian of a vector evaluator at ``point`` as a dense array."""
    z, point, c = _symbolic_evaluation(evaluator, point)
    function = ca.Function('jacobian', [z], [c, ca.jacobian(c, z)])
    value, jacobian = function(point)
    _checked(symbolic.to_vector(value), 'evaluator value')
    return _checked(symbolic.to_matrix(jacobian), 'jacobian')


class NlpProblem(object):
    """Smooth NLP  min f(z)  s.t.  c_eq(z) = 0, c_in(z) <= 0, l <= z <= u.

    Expressions may depend on a parameter symbol whose value is bound per
    instance, so one compiled problem serves many MPC steps. Use
    ``with_data`` to obtain an instance with another initial point,
    parameter value or bounds; the compiled evaluators are shared.

    Attributes:
        n_vars (int): number of variables.
        m_eq, m_in (int): number of equality and inequality constraints.
        blocks (list of slices): variable blocks for the block-diagonal
            Hessian model.
        lower, upper (arrays): variable bounds.
        initial (array): initial point.
        parameters (array): parameter values.
    """

    def __init__(self, variables, objective, equalities=None,
                 inequalities=None, lower=None, upper=None, initial=None,
                 parameters=None, parameter_values=None, blocks=None,
                 quadratic=None, name='nlp'):
        z = variables
        p = parameters if parameters is not None else ca.SX.sym('p', 0)
        c_eq = equalities if equalities is not None else ca.SX(0, 1)
        c_in = inequalities if inequalities is not None else ca.SX(0, 1)
        self.name = name
        self.n_vars = z.numel()
        self.m_eq = c_eq.numel()
        self.m_in = c_in.numel()
        self._symbols = (z, p, objective, c_eq, c_in)

        self._functions = {
            'f': ca.Function(name + '_f', [z, p],
                             [objective, ca.gradient(objective, z)]),
            'eq': ca.Function(name + '_eq', [z, p],
                              [c_eq, ca.jacobian(c_eq, z)]),
            'in': ca.Function(name + '_in', [z, p],
                              [c_in, ca.jacobian(c_in, z)]),
        }
        if quadratic is not None:
            hq = ca.Function(name + '_hq', [z, p],
                             [ca.hessian(quadratic, z)[0]])
            self._functions['hq'] = to_sparse(
                hq(np.zeros(self.n_vars), np.zeros(p.numel())))

        n = self.n_vars
        self.blocks = blocks or [slice(0, n)]
        self.lower = np.full(n, -np.inf) if lower is None else \
            np.asarray(lower, dtype=float)
        self.upper = np.full(n, np.inf) if upper is None else \
            np.asarray(upper, dtype=float)
        self.initial = np.zeros(n) if initial is None else \
            np.asarray(initial, dtype=float)
        self.parameters = np.zeros(p.numel()) if parameter_values is None \
            else np.asarray(parameter_values, dtype=float)

    def with_data(self, initial=None, parameter_values=None, lower=None,
                  upper=None):
        """Copy sharing the compiled evaluators with new numeric data."""
        problem = copy.copy(self)
        if initial is not None:
            problem.initial = np.asarray(initial, dtype=float)
        if parameter_values is not None:
            problem.parameters = np.asarray(parameter_values, dtype=float)
        if lower is not None:
            problem.lower = np.asarray(lower, dtype=float)
        if upper is not None:
            problem.upper = np.asarray(upper, dtype=float)
        return problem

    def objective(self, z):
        value, _ = self._functions['f'](z, self.parameters)
        return float(_checked(symbolic.to_scalar(value), 'objective'))

    def gradient(self, z):
        _, gradient = self._functions['f'](z, self.parameters)
        return _checked(symbolic.to_vector(gradient), 'gradient')

    def equalities(self, z):
        """Equality values and their sparse Jacobian."""
        value, jacobian = self._functions['eq'](z, self.parameters)
        return (_checked(symbolic.to_vector(value), 'equality'),
                to_sparse(jacobian))

    def inequalities(self, z):
        """Inequality values (<= 0 convention) and their sparse Jacobian."""
        value, jacobian = self._functions['in'](z, self.parameters)
        return (_checked(symbolic.to_vector(value), 'inequality'),
                to_sparse(jacobian))

    def quadratic_hessian(self):
        """Constant Hessian of the quadratic objective part, zero if none."""
        if 'hq' in self._functions:
            return self._functions['hq']
        return sp.csc_matrix((self.n_vars, self.n_vars))

    def lagrangian_hessian(self, z, lam_eq, lam_in):
        """Exact Hessian of the Lagrangian, compiled on first use."""
        if 'hess' not in self._functions:
            z_sym, p, f, c_eq, c_in = self._symbols
            l_eq = ca.SX.sym('l_eq', self.m_eq)
            l_in = ca.SX.sym('l_in', self.m_in)
            L = f + ca.dot(l_eq, c_eq) + ca.dot(l_in, c_in)
            self._functions['hess'] = ca.Function(
                self.name + '_hess', [z_sym, p, l_eq, l_in],
                [ca.hessian(L, z_sym)[0]])
        H = self._functions['hess'](z, self.parameters, lam_eq, lam_in)
        return _checked(symbolic.to_matrix(H), 'hessian')

    def lagrangian_gradient(self, z, lam_eq, lam_in):
        _, J_eq = self.equalities(z)
        _, J_in = self.inequalities(z)
        return self.gradient(z) + J_eq.T.dot(lam_eq) + J_in.T.dot(lam_in)

    def violation(self, z):
        """l1 norm of the constraint violation."""
        c_eq, _ = self.equalities(z)
        c_in, _ = self.inequalities(z)
        return float(np.sum(np.abs(c_eq)) + np.sum(np.maximum(c_in, 0.0)))


class NlpSolution(object):
    """Result of ``solve``.

    Attributes:
        z (array): primal point.
        lam_eq, lam_in, lam_bounds (arrays): multipliers, with
            grad f + J_eq'lam_eq + J_in'lam_in + lam_bounds = 0 at a KKT point.
        status (SolverStatus): termination status.
        kkt (float): KKT residual at ``z``.
        iterations (int): SQP iterations.
        wall_time (float): seconds spent in ``solve``.
        objective (float): objective at ``z``.
    """

    def __init__(self, z, lam_eq, lam_in, lam_bounds, status, kkt,
                 iterations, wall_time, objective):
        self.z = z
        self.lam_eq = lam_eq
        self.lam_in = lam_in
        self.lam_bounds = lam_bounds
        self.status = status
        self.kkt = kkt
        self.iterations = iterations
        self.wall_time = wall_time
        self.objective = objective

    @property
    def converged(self):
        return self.status == SolverStatus.CONVERGED

    def stats(self):
        return {
            'status': self.status.value,
            'iterations': self.iterations,
            'kkt_residual': self.kkt,
            'wall_time': self.wall_time,
        }


def kkt_residual(problem, z, lam_eq, lam_in, lam_bounds):
    """Max of the stationarity, feasibility and complementarity residuals.

    All residuals are infinity norms and are recomputed from the problem
    evaluators.
    """
    c_eq, J_eq = problem.equalities(z)
    c_in, J_in = problem.inequalities(z)
    lam_eq = np.asarray(lam_eq, dtype=float)
    lam_in = np.asarray(lam_in, dtype=float)
    lam_bounds = np.asarray(lam_bounds, dtype=float)

    stationarity = problem.gradient(z) + J_eq.T.dot(lam_eq) + \
        J_in.T.dot(lam_in) + lam_bounds

    upper_gap = problem.upper - z
    lower_gap = z - problem.lower
    nu_upper = np.maximum(lam_bounds, 0.0)
    nu_lower = np.maximum(-lam_bounds, 0.0)
    with np.errstate(invalid='ignore'):
        bound_complementarity = np.concatenate([
            np.where(nu_upper > 0, nu_upper * upper_gap, 0.0),
            np.where(nu_lower > 0, nu_lower * lower_gap, 0.0)])

    residuals = [
        stationarity,
        c_eq,
        np.maximum(c_in, 0.0),
        np.maximum(-upper_gap, 0.0),
        np.maximum(-lower_gap, 0.0),
        np.maximum(-lam_in, 0.0),
        lam_in * c_in,
        bound_complementarity,
    ]
    return max([float(np.max(np.abs(r))) if r.size else 0.0
                for r in residuals])


def damped_bfgs(B, s, y, c=0.2, eps=1e-12):
    """Powell-damped BFGS update of a Hessian approximation.

    The update keeps ``B`` positive definite. Returns ``B`` unchanged when
    the step is too small to carry curvature information.
    """
    Bs = B.dot(s)
    sBs = float(s.dot(Bs))
    if sBs <= eps or np.linalg.norm(s) <= eps:
        return B
    sy = float(s.dot(y))
    if sy >= c * sBs:
        theta = 1.0
    else:
        theta = (1.0 - c) * sBs / (sBs - sy)
    y_damped = theta * y + (1.0 - theta) * Bs
    sy_damped = float(s.dot(y_damped))
    if sy_damped <= eps:
        return B
    B = B - np.outer(Bs, Bs) / sBs + np.outer(y_damped, y_damped) / sy_damped
    return 0.5 * (B + B.T)


def _floor_eigenvalues(H, floor):
    w, V = np.linalg.eigh(0.5 * (H + H.T))
    return (V * np.maximum(w, floor)).dot(V.T)


class _HessianModel(object):
    """Block-diagonal Hessian model of the Lagrangian.

    In ``bfgs`` mode the constant Hessian of the quadratic objective part is
    used exactly and each block adds a damped BFGS approximation of the
    remaining curvature. In ``exact`` mode the exact Lagrangian Hessian is
    used with its blocks' eigenvalues floored.
    """

    def __init__(self, problem, kind='bfgs', initial_scale=1.0,
                 eigenvalue_floor=1e-8):
        if kind not in ('bfgs', 'exact'):
            raise ValueError("Unknown Hessian model {}".format(kind))
        self.problem = problem
        self.kind = kind
        self.eigenvalue_floor = eigenvalue_floor
        self.constant = problem.quadratic_hessian()
        self.approximations = [initial_scale * np.eye(b.stop - b.start)
                               for b in problem.blocks]

    def matrix(self, z, lam_eq, lam_in):
        if self.kind == 'exact':
            H = self.problem.lagrangian_hessian(z, lam_eq, lam_in)
            return sp.block_diag([
                _floor_eigenvalues(H[b, b], self.eigenvalue_floor)
                for b in self.problem.blocks], format='csc')
        return self.constant + sp.block_diag(self.approximations,
                                             format='csc')

    def update(self, s, y):
        if self.kind == 'exact':
            return
        y = y - self.constant.dot(s)
        self.approximations = [damped_bfgs(B, s[b], y[b])
                               for B, b in zip(self.approximations,
                                               self.problem.blocks)]


def _merit(problem, z, penalty):
    """l1 merit function, infinite where the evaluators fail."""
    try:
        return problem.objective(z) + penalty * problem.violation(z)
    except DomainError:
        return np.inf


def _log_iterate(log_stream, verbose, iteration, objective, kkt, alpha):
    line = '{:4d} {: .10e} {:.3e} {:.3e}'.format(iteration, objective, kkt,
                                                 alpha)
    if verbose:
        logger.info(line)
    else:
        logger.debug(line)
    if log_stream is not None:
        log_stream.write(line + '\n')


def solve(problem, max_iter=200, tol=1e-6, verbose=False, hessian='bfgs',
          log_stream=None, armijo=1e-4, min_step=1e-12):
    """Solve a smooth NLP with an l1-merit line-search SQP method.

    Each iteration solves a convex QP built from a regularized
    block-diagonal Hessian model. Infeasible QPs switch to the elastic
    subproblem. The step is accepted by an Armijo test on the l1 merit
    function, with one second-order correction when the full step fails.

    Args:
        problem (NlpProblem): the problem, started at ``problem.initial``.
        max_iter (int): maximum number of SQP iterations.
        tol (float): KKT residual tolerance.
        verbose (bool): log iterates at INFO instead of DEBUG.
        hessian (str): 'bfgs' or 'exact'.
        log_stream: optional text stream receiving one line per iterate
            (iteration, objective, KKT residual, step length).

    Returns:
        NlpSolution. Failures are reported by its status, never raised.
    """
    start = timer()
    z = np.clip(problem.initial, problem.lower, problem.upper)
    lam_eq = np.zeros(problem.m_eq)
    lam_in = np.zeros(problem.m_in)
    lam_bounds = np.zeros(problem.n_vars)
    model = _HessianModel(problem, hessian)
    regularization = 1e-4
    penalty = 1.0
    restoration_steps = 0
    restoration_best = np.inf

    def finish(status, iterations):
        kkt = kkt_residual(problem, z, lam_eq, lam_in, lam_bounds)
        if status == SolverStatus.CONVERGED and kkt > tol:
            status = SolverStatus.MAX_ITER
        solution = NlpSolution(z, lam_eq, lam_in, lam_bounds, status, kkt,
                               iterations, timer() - start,
                               problem.objective(z))
        logger.debug('{} finished: {} after {} iterations, kkt {:.3e}'.format(
            problem.name, status.value, iterations, kkt))
        return solution

    kkt = kkt_residual(problem, z, lam_eq, lam_in, lam_bounds)
    _log_iterate(log_stream, verbose, 0, problem.objective(z), kkt, 0.0)
    if kkt <= tol:
        return finish(SolverStatus.CONVERGED, 0)

    for iteration in range(1, max_iter + 1):
        g = problem.gradient(z)
        c_eq, J_eq = problem.equalities(z)
        c_in, J_in = problem.inequalities(z)
        H = model.matrix(z, lam_eq, lam_in) + \
            regularization * sp.identity(problem.n_vars, format='csc')
        subproblem = QpSubproblem(H, g, c_eq, J_eq, c_in, J_in,
                                  problem.lower - z, problem.upper - z)
        theta = problem.violation(z)

        step = subproblem.solve()
        if step is None:
            step = subproblem.solve_elastic(max(penalty, 1.0) * 10.0)
            if step is None:
                return finish(SolverStatus.INFEASIBLE, iteration)
            predicted = subproblem.linearized_violation(step.d)
            if theta - predicted <= 1e-8 * max(1.0, theta):
                return finish(SolverStatus.INFEASIBLE, iteration)
            if theta < 0.99 * restoration_best:
                restoration_best = theta
                restoration_steps = 0
            restoration_steps += 1
            if restoration_steps > 10:
                return finish(SolverStatus.INFEASIBLE, iteration)
        else:
            restoration_steps = 0
            restoration_best = np.inf

        multipliers = np.concatenate([step.lam_eq, step.lam_in])
        if multipliers.size:
            penalty = max(penalty, 1.1 * float(np.max(np.abs(multipliers))))

        d = step.d
        descent = float(g.dot(d)) + penalty * (
            subproblem.linearized_violation(d) - theta)
        merit = _merit(problem, z, penalty)

        alpha = 1.0
        accepted = None
        if np.max(np.abs(d)) <= 1e-14 * (1.0 + np.max(np.abs(z))):
            accepted = (d, step)
        while accepted is None:
            trial = np.clip(z + alpha * d, problem.lower, problem.upper)
            if _merit(problem, trial, penalty) <= \
                    merit + armijo * alpha * descent:
                accepted = (alpha * d, step)
                break
            if alpha == 1.0:
                correction = _second_order_correction(problem, subproblem,
                                                      z, d)
                if correction is not None:
                    d_soc = correction.d
                    trial = np.clip(z + d_soc, problem.lower, problem.upper)
                    if _merit(problem, trial, penalty) <= \
                            merit + armijo * descent:
                        accepted = (d_soc, correction)
                        break
            alpha *= 0.5
            if alpha < min_step:
                return finish(SolverStatus.LINE_SEARCH_FAILURE, iteration)

        d, step = accepted
        if alpha == 1.0:
            regularization = max(regularization * 0.3, 1e-8)
        else:
            regularization = min(regularization * 10.0, 1e4)

        z_new = np.clip(z + d, problem.lower, problem.upper)
        lam_eq = lam_eq + alpha * (step.lam_eq - lam_eq)
        lam_in = lam_in + alpha * (step.lam_in - lam_in)
        lam_bounds = lam_bounds + alpha * (step.lam_bounds - lam_bounds)

        model.update(z_new - z,
                     problem.lagrangian_gradient(z_new, lam_eq, lam_in) -
                     problem.lagrangian_gradient(z, lam_eq, lam_in))
        z = z_new

        kkt = kkt_residual(problem, z, lam_eq, lam_in, lam_bounds)
        _log_iterate(log_stream, verbose, iteration, problem.objective(z),
                     kkt, alpha)
        if kkt <= tol:
            return finish(SolverStatus.CONVERGED, iteration)

    return finish(SolverStatus.MAX_ITER, max_iter)


def _second_order_correction(problem, subproblem, z, d):
    """Resolve the QP with constants corrected by the curvature along ``d``."""
    trial = np.clip(z + d, problem.lower, problem.upper)
    try:
        c_eq, _ = problem.equalities(trial)
        c_in, _ = problem.inequalities(trial)
    except DomainError:
        return None
    corrected = subproblem.with_constants(
        c_eq - subproblem.J_eq.dot(d), c_in - subproblem.J_in.dot(d))
    return corrected.solve()

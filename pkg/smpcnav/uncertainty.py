# -*- coding: utf-8 -*-
"""Covariance propagation under linear feedback and expected costs.

The joint state is the robot 5-state followed by the human 2-state. Its
covariance is split in three blocks (robot, robot-human, human). The
formulas below accept numpy arrays or casadi expressions; the OCP uses
the same functions to build its constraints.
"""

import enum
import logging

import casadi as ca
import numpy as np

from smpcnav import dynamics
from smpcnav import symbolic
from smpcnav.types import ROBOT_STATE_SIZE, ROBOT_INPUT_SIZE
from smpcnav.types import HUMAN_STATE_SIZE, JOINT_STATE_SIZE, V


logger = logging.getLogger(__name__)

NR, NU, NH, NX = ROBOT_STATE_SIZE, ROBOT_INPUT_SIZE, HUMAN_STATE_SIZE, \
    JOINT_STATE_SIZE

# Number of unique entries stored per block
SIGMA_R_SIZE = NR * (NR + 1) // 2
SIGMA_RH_SIZE = NR * NH
SIGMA_H_SIZE = NH * (NH + 1) // 2


def _lift(*values):
    """Convert numeric operands to casadi if any operand is symbolic."""
    if symbolic.is_symbolic(*values):
        return [v if symbolic.is_symbolic(v) else ca.DM(np.atleast_1d(v))
                for v in values]
    return [np.asarray(v, dtype=float) for v in values]


def _trace(M):
    if symbolic.is_symbolic(M):
        return ca.trace(M)
    return float(np.trace(M))


def _block(rows):
    if symbolic.is_symbolic(*[b for row in rows for b in row]):
        return ca.vertcat(*[ca.horzcat(*row) for row in rows])
    return np.block(rows)


class CovarianceBlocks(object):
    """Joint covariance stored as its robot, robot-human and human blocks.

    Symmetric blocks are stored as upper triangles, so the matrices read
    back are symmetric by construction.

    Attributes:
        sigma_r (5x5 array): robot state covariance.
        sigma_rh (5x2 array): robot-human cross covariance.
        sigma_h (2x2 array): human position covariance [m^2].
    """

    def __init__(self, sigma_r=None, sigma_rh=None, sigma_h=None):
        self.sigma_r = np.zeros((NR, NR)) if sigma_r is None else sigma_r
        self.sigma_rh = np.zeros((NR, NH)) if sigma_rh is None else sigma_rh
        self.sigma_h = np.zeros((NH, NH)) if sigma_h is None else sigma_h

    @property
    def sigma_r(self):
        return symbolic.symmetric_from_upper(self._r_upper, NR)

    @sigma_r.setter
    def sigma_r(self, value):
        self._r_upper = symbolic.upper_from_symmetric(
            np.asarray(value, dtype=float).reshape(NR, NR))

    @property
    def sigma_rh(self):
        return self._rh.copy()

    @sigma_rh.setter
    def sigma_rh(self, value):
        self._rh = np.asarray(value, dtype=float).reshape(NR, NH)

    @property
    def sigma_h(self):
        return symbolic.symmetric_from_upper(self._h_upper, NH)

    @sigma_h.setter
    def sigma_h(self, value):
        self._h_upper = symbolic.upper_from_symmetric(
            np.asarray(value, dtype=float).reshape(NH, NH))

    @property
    def sigma_r_upper(self):
        """The 15 unique entries of sigma_r, row-major upper triangle."""
        return self._r_upper.copy()

    @property
    def velocity_variance(self):
        """Variance of the robot forward velocity."""
        return float(self._r_upper[symbolic.upper_indices(NR).index((V, V))])

    def assemble(self):
        """The full 7x7 covariance matrix."""
        return assemble_covariance(self.sigma_r, self.sigma_rh, self.sigma_h)

    @classmethod
    def from_matrix(cls, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return cls(sigma[:NR, :NR], sigma[:NR, NR:], sigma[NR:, NR:])

    def __eq__(self, other):
        return (isinstance(other, CovarianceBlocks) and
                np.array_equal(self._r_upper, other._r_upper) and
                np.array_equal(self._rh, other._rh) and
                np.array_equal(self._h_upper, other._h_upper))

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'CovarianceBlocks(sigma_r={}, sigma_rh={}, sigma_h={})'.format(
            self.sigma_r.tolist(), self.sigma_rh.tolist(),
            self.sigma_h.tolist())


def assemble_covariance(sigma_r, sigma_rh, sigma_h):
    """Stack the three blocks into the 7x7 joint covariance."""
    sigma_r, sigma_rh, sigma_h = _lift(sigma_r, sigma_rh, sigma_h)
    return _block([[sigma_r, sigma_rh], [sigma_rh.T, sigma_h]])


class GainMode(enum.Enum):
    ZERO = 'zero'
    PARTIAL = 'partial'
    FULL = 'full'


class FeedbackGain(object):
    """Feedback gain of one stage with mode dependent sparsity.

    Full gains are stored as the dense 2x7 matrix. Partial gains keep
    the 2x2 human-position gain ``kh`` and the scalar ``krv`` feeding the
    forward-velocity deviation to the forward acceleration.
    """

    def __init__(self, mode=GainMode.ZERO, full=None, kh=None, krv=0.0):
        self.mode = GainMode(mode)
        self.full = np.zeros((NU, NX)) if full is None else \
            np.asarray(full, dtype=float).reshape(NU, NX)
        self.kh = np.zeros((NU, NH)) if kh is None else \
            np.asarray(kh, dtype=float).reshape(NU, NH)
        self.krv = float(krv)

    @classmethod
    def zero(cls):
        return cls(GainMode.ZERO)

    @classmethod
    def partial(cls, kh, krv=0.0):
        return cls(GainMode.PARTIAL, kh=kh, krv=krv)

    @classmethod
    def dense(cls, K):
        return cls(GainMode.FULL, full=K)


def partial_gain_matrix(kh, krv):
    """Dense 2x7 embedding of a partial gain.

    ``krv`` sits in the forward-acceleration row, forward-velocity column
    and ``kh`` in the human-position columns; all else is zero.
    """
    if symbolic.is_symbolic(kh, krv):
        kh, krv = _lift(kh, krv)
        K = ca.SX(NU, NX)
        K[:, NR:] = kh
        K[0, V] = krv
        return K
    K = np.zeros((NU, NX))
    K[:, NR:] = np.asarray(kh, dtype=float).reshape(NU, NH)
    K[0, V] = krv
    return K


def embed_gain(gain):
    """Dense 2x7 matrix of a ``FeedbackGain``.

    >>> embed_gain(FeedbackGain.partial([[1, 2], [3, 4]], 5)).tolist()
    [[0.0, 0.0, 0.0, 5.0, 0.0, 1.0, 2.0], [0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 4.0]]
    """
    if gain.mode == GainMode.ZERO:
        return np.zeros((NU, NX))
    if gain.mode == GainMode.PARTIAL:
        return partial_gain_matrix(gain.kh, gain.krv)
    return gain.full.copy()


class NoiseModel(object):
    """Per-stage covariance of the human velocity input.

    Attributes:
        w_h (list of 2x2 arrays): covariance of the human velocity at each
            stage [m^2/s^2].
    """

    def __init__(self, w_h):
        self.w_h = [check_psd(np.asarray(w, dtype=float).reshape(NH, NH))
                    for w in w_h]

    @classmethod
    def constant(cls, variance, n):
        """Isotropic noise ``variance * I2`` for ``n`` stages."""
        return cls([variance * np.eye(NH)] * n)

    def __len__(self):
        return len(self.w_h)


def check_psd(matrix, tolerance=1e-12):
    """Return ``matrix`` if symmetric positive semi-definite, else raise."""
    if not np.allclose(matrix, matrix.T, atol=tolerance):
        raise ValueError("Covariance is not symmetric: {}".format(
            matrix.tolist()))
    if np.linalg.eigvalsh(matrix).min() < -tolerance:
        raise ValueError("Covariance is not positive semi-definite: {}"
                         .format(matrix.tolist()))
    return matrix


def closed_loop_matrix(A_r, B_r, K):
    """Closed-loop joint transition blockdiag(A_r, I2) + [B_r; 0] K."""
    sym = symbolic.is_symbolic(A_r, B_r, K)
    A_r, B_r, K = _lift(A_r, B_r, K)
    A_h, _ = dynamics.human_matrices(0.0)  # identity for any dt
    zeros = np.zeros((NR, NH))
    if sym:
        A_h, zeros = ca.DM(A_h), ca.DM(zeros)
    A = _block([[A_r, zeros], [zeros.T, A_h]])
    B = _block([[B_r], [zeros.T[:, :NU]]])
    return A + B @ K


def _noise_matrix(w, dt):
    G = np.zeros((NX, NH))
    G[NR:, :] = dynamics.human_matrices(dt)[1]
    return G @ np.asarray(w, dtype=float) @ G.T


def propagate_matrix(sigma, A_r, B_r, K, w, dt):
    """One step of the joint covariance recursion on full 7x7 matrices."""
    A = closed_loop_matrix(A_r, B_r, K)
    noise = _noise_matrix(w, dt)
    if symbolic.is_symbolic(A, sigma):
        sigma, = _lift(sigma)
        return A @ sigma @ A.T + ca.DM(noise)
    return A @ np.asarray(sigma, dtype=float) @ A.T + noise


def propagate_covariance(sigma, A_r, B_r, K, w, dt):
    """Propagate ``CovarianceBlocks`` one step.

    Returns Ǎ Σ Ǎᵀ + [0; B_h] W [0; B_h]ᵀ split into blocks, with the
    symmetric blocks symmetrized.
    """
    S = propagate_matrix(sigma.assemble(), A_r, B_r, K, w, dt)
    S = 0.5 * (S + S.T)
    return CovarianceBlocks.from_matrix(S)


def human_covariance_schedule(noise, dt, N):
    """Human position covariances for stages 0..N.

    The current human position is measured exactly, so the schedule
    starts at zero and grows by dt^2 W_k each step.
    """
    if len(noise) < N:
        raise ValueError("Noise model has {} stages, {} needed".format(
            len(noise), N))
    A_h, B_h = dynamics.human_matrices(dt)
    schedule = [np.zeros((NH, NH))]
    for k in range(N):
        schedule.append(A_h.dot(schedule[-1]).dot(A_h.T) +
                        B_h.dot(noise.w_h[k]).dot(B_h.T))
    return schedule


def _as_matrix(sigma):
    if isinstance(sigma, CovarianceBlocks):
        return sigma.assemble()
    return sigma


def _quadratic(e, W):
    if symbolic.is_symbolic(e, W):
        e, W = _lift(e, W)
        return 0.5 * ca.bilin(W, e, e)
    e = np.asarray(e, dtype=float).ravel()
    return 0.5 * float(e @ np.asarray(W, dtype=float) @ e)


def tracking_stage_cost(x, u, Q, R, x_ref, u_ref):
    """Weighted squared tracking error of one stage."""
    return _quadratic(_difference(u, u_ref), R) + \
        _quadratic(_difference(x, x_ref), Q)


def tracking_terminal_cost(x, Q_e, x_ref):
    return _quadratic(_difference(x, x_ref), Q_e)


def _difference(a, b):
    if symbolic.is_symbolic(a, b):
        a, b = _lift(a, b)
        return a - b
    return np.asarray(a, dtype=float).ravel() - \
        np.asarray(b, dtype=float).ravel()


def expected_stage_cost(x, u, sigma, K, Q, R, reference):
    """Expected tracking cost of a stage under Gaussian deviations.

    Adds 1/2 tr(Q Σʳ) and 1/2 tr(R K Σ Kᵀ) to the nominal cost.
    ``reference`` is the pair (x_ref, u_ref).
    """
    x_ref, u_ref = reference
    S = _as_matrix(sigma)
    nominal = tracking_stage_cost(x, u, Q, R, x_ref, u_ref)
    S, K, Q, R = _lift(S, K, Q, R)
    state_term = 0.5 * _trace(Q @ S[:NR, :NR])
    input_term = 0.5 * _trace(R @ K @ S @ K.T)
    return nominal + state_term + input_term


def expected_terminal_cost(x_N, sigma_N, Q_e, reference):
    """Expected terminal tracking cost, 1/2 tr(Q_e Σʳ) over nominal."""
    S = _as_matrix(sigma_N)
    nominal = tracking_terminal_cost(x_N, Q_e, reference)
    S, Q_e = _lift(S, Q_e)
    return nominal + 0.5 * _trace(Q_e @ S[:NR, :NR])


def constraint_variance(grad_h, sigma, K):
    """Linearized variance of one constraint component.

    ``grad_h`` stacks the 7 state and 2 input partial derivatives. With
    the feedback ``K`` the input deviation is K times the state deviation,
    so the variance is gᵀ Σ g with g = g_x + Kᵀ g_u.
    """
    if symbolic.is_symbolic(grad_h):
        row = ca.vec(grad_h).T
    else:
        row = np.asarray(grad_h, dtype=float).reshape(1, -1)
    value = constraint_variances(row, sigma, K)[0]
    return value if symbolic.is_symbolic(value) else float(value)


def constraint_variances(jacobian, sigma, K):
    """Linearized variances of all rows of a constraint Jacobian.

    ``jacobian`` has one row per constraint component and the 7 state
    columns followed by the 2 input columns.

    >>> J = np.zeros((1, 9)); J[0, 5] = 1.0
    >>> S = np.zeros((7, 7)); S[5, 5] = 0.04
    >>> constraint_variances(J, S, np.zeros((2, 7))).tolist()
    [0.04]
    """
    S = _as_matrix(sigma)
    jacobian, S, K = _lift(jacobian, S, K)
    G = jacobian[:, :NX] + jacobian[:, NX:] @ K
    if symbolic.is_symbolic(G, S):
        return ca.sum2((G @ S) * G)
    return np.sum((G @ S) * G, axis=1)

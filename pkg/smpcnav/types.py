"""Basic state and input types of the robot and the human."""

import numpy as np


ROBOT_STATE_SIZE = 5
ROBOT_INPUT_SIZE = 2
HUMAN_STATE_SIZE = 2
JOINT_STATE_SIZE = ROBOT_STATE_SIZE + HUMAN_STATE_SIZE

# Indices in the joint 7-vector
PX, PY, THETA, V, OMEGA, HX, HY = range(JOINT_STATE_SIZE)


def as_vector(value):
    """Return the numpy vector of a state/input object or array-like."""
    return np.asarray(getattr(value, 'vector', value), dtype=float).ravel()


class _Vector(object):
    """Fixed-size float vector with named components."""
    fields = ()

    def __init__(self, *values):
        if len(values) == 1 and np.ndim(values[0]) == 1:
            values = values[0]
        elif not values:
            values = np.zeros(len(self.fields))
        self.vector = values

    @property
    def vector(self):
        return self._vector

    @vector.setter
    def vector(self, value):
        value = np.asarray(value, dtype=float).ravel()
        if value.shape != (len(self.fields),):
            raise ValueError("{} expects {} values, got {}".format(
                type(self).__name__, len(self.fields), value.size))
        self._vector = value

    @classmethod
    def from_vector(cls, vector):
        return cls(as_vector(vector))

    def __getattr__(self, name):
        if name in type(self).fields:
            return self._vector[type(self).fields.index(name)]
        raise AttributeError(name)

    def __eq__(self, other):
        return (type(self) is type(other) and
                np.array_equal(self.vector, other.vector))

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '{}({})'.format(type(self).__name__, ', '.join(
            '{}={}'.format(f, v) for f, v in zip(self.fields, self.vector)))


class RobotState(_Vector):
    """Differential-drive robot state.

    Attributes:
        px, py (float): center position [m].
        theta (float): heading [rad], never wrapped.
        v (float): forward velocity [m/s].
        omega (float): angular velocity [rad/s].
    """
    fields = ('px', 'py', 'theta', 'v', 'omega')


class RobotInput(_Vector):
    """Robot accelerations: forward ``a`` [m/s^2] and angular ``alpha``."""
    fields = ('a', 'alpha')


class HumanState(_Vector):
    fields = ('px', 'py')


class HumanInput(_Vector):
    fields = ('vx', 'vy')


class JointState(object):
    """Robot and human states stacked robot-then-human as a 7-vector.

    >>> x = JointState(RobotState(1., 2., 0., 0.5, 0.), HumanState(3., 4.))
    >>> x.vector.tolist()
    [1.0, 2.0, 0.0, 0.5, 0.0, 3.0, 4.0]
    >>> JointState.from_vector(x.vector) == x
    True
    """

    def __init__(self, robot=None, human=None):
        self.robot = robot if robot is not None else RobotState()
        self.human = human if human is not None else HumanState()

    @property
    def vector(self):
        return np.concatenate([self.robot.vector, self.human.vector])

    @classmethod
    def from_vector(cls, vector):
        vector = as_vector(vector)
        if vector.shape != (JOINT_STATE_SIZE,):
            raise ValueError("JointState expects {} values, got {}".format(
                JOINT_STATE_SIZE, vector.size))
        return cls(RobotState(vector[:ROBOT_STATE_SIZE]),
                   HumanState(vector[ROBOT_STATE_SIZE:]))

    def __eq__(self, other):
        return (isinstance(other, JointState) and
                self.robot == other.robot and self.human == other.human)

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'JointState({!r}, {!r})'.format(self.robot, self.human)

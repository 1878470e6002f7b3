import numpy as np

from ..exceptions import GraphShapeError


LOG_2PI = np.log(2 * np.pi)


class Primitive:
    """
    Base class for a primitive numerical operation. Each primitive defines shape inference, a forward evaluation, and a vector-Jacobian product used by the reverse pass.

    Attributes:

        kind (str) - op-kind name

        arity (int) - number of inputs

    """

    kind = None
    arity = None

    def shape(self, shapes, **attrs):
        """
        Returns output shape for the given input shapes.

        Args:

            shapes (tuple of tuple) - input shapes

            attrs: op attributes (e.g. axis)

        Returns:

            shape (tuple)

        """
        raise NotImplementedError

    def forward(self, *values, **attrs):
        """ Returns output value for input <values>. """
        raise NotImplementedError

    def backward(self, adjoint, output, values, **attrs):
        """
        Returns adjoints of each input.

        Args:

            adjoint (np.ndarray[float]) - adjoint of the output

            output (np.ndarray[float]) - forward value of the output

            values (tuple of np.ndarray[float]) - forward values of the inputs

            attrs: op attributes

        Returns:

            adjoints (tuple of np.ndarray[float])

        """
        raise NotImplementedError


# ============================= ELEMENTWISE ===================================


class Elementwise(Primitive):
    """ Elementwise primitive. All inputs must share one shape. """

    def shape(self, shapes, **attrs):
        if any(s != shapes[0] for s in shapes[1:]):
            raise GraphShapeError(
                '{:s} requires equal shapes, got {}'.format(self.kind, shapes))
        return shapes[0]


class Add(Elementwise):
    kind, arity = 'add', 2

    def forward(self, a, b):
        return a + b

    def backward(self, adjoint, output, values):
        return adjoint, adjoint


class Subtract(Elementwise):
    kind, arity = 'subtract', 2

    def forward(self, a, b):
        return a - b

    def backward(self, adjoint, output, values):
        return adjoint, -adjoint


class Multiply(Elementwise):
    kind, arity = 'multiply', 2

    def forward(self, a, b):
        return a * b

    def backward(self, adjoint, output, values):
        a, b = values
        return adjoint * b, adjoint * a


class Relu(Elementwise):
    kind, arity = 'relu', 1

    def forward(self, a):
        return np.maximum(a, 0.)

    def backward(self, adjoint, output, values):
        return (adjoint * (values[0] > 0),)


class Tanh(Elementwise):
    kind, arity = 'tanh', 1

    def forward(self, a):
        return np.tanh(a)

    def backward(self, adjoint, output, values):
        return (adjoint * (1. - output**2),)


class Exp(Elementwise):
    kind, arity = 'exp', 1

    def forward(self, a):
        return np.exp(a)

    def backward(self, adjoint, output, values):
        return (adjoint * output,)


class Log(Elementwise):
    kind, arity = 'log', 1

    def forward(self, a):
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.log(a)

    def backward(self, adjoint, output, values):
        return (adjoint / values[0],)


class Negate(Elementwise):
    kind, arity = 'negate', 1

    def forward(self, a):
        return -a

    def backward(self, adjoint, output, values):
        return (-adjoint,)


class Square(Elementwise):
    kind, arity = 'square', 1

    def forward(self, a):
        return a**2

    def backward(self, adjoint, output, values):
        return (2. * values[0] * adjoint,)


class GaussianLogDensity(Elementwise):
    """ Elementwise log N(x | mean, exp(log_std)^2). """
    kind, arity = 'gaussian_log_density', 3

    def forward(self, x, mean, log_std):
        z = (x - mean) * np.exp(-log_std)
        return -0.5 * LOG_2PI - log_std - 0.5 * z**2

    def backward(self, adjoint, output, values):
        x, mean, log_std = values
        precision = np.exp(-2. * log_std)
        residual = x - mean
        dx = -residual * precision * adjoint
        dlog_std = (residual**2 * precision - 1.) * adjoint
        return dx, -dx, dlog_std


# ============================ LINEAR ALGEBRA =================================


class MatMul(Primitive):
    """ (..., k) @ (k, n) -> (..., n). Leading axes of the left operand are batch axes. """
    kind, arity = 'matmul', 2

    def shape(self, shapes):
        a, b = shapes
        if len(a) < 1 or len(b) != 2 or a[-1] != b[0]:
            raise GraphShapeError(
                'matmul cannot combine shapes {} and {}'.format(a, b))
        return a[:-1] + (b[1],)

    def forward(self, a, b):
        return a @ b

    def backward(self, adjoint, output, values):
        a, b = values
        da = adjoint @ b.T
        db = a.reshape(-1, a.shape[-1]).T @ adjoint.reshape(-1, b.shape[1])
        return da, db


class Affine(Primitive):
    """ x W + b over the last axis of x; leading axes of x are batch axes. """
    kind, arity = 'affine', 3

    def shape(self, shapes):
        x, w, b = shapes
        if len(x) < 1 or len(w) != 2 or x[-1] != w[0] or b != (w[1],):
            raise GraphShapeError(
                'affine cannot combine shapes {}, {}, {}'.format(x, w, b))
        return x[:-1] + (w[1],)

    def forward(self, x, w, b):
        return x @ w + b

    def backward(self, adjoint, output, values):
        x, w, b = values
        flat = adjoint.reshape(-1, w.shape[1])
        dx = adjoint @ w.T
        dw = x.reshape(-1, w.shape[0]).T @ flat
        db = flat.sum(axis=0)
        return dx, dw, db


# ============================== REDUCTIONS ===================================


def _reduced_shape(shape, axis, kind):
    """ Returns <shape> with <axis> removed (all axes if None). """
    if axis is None:
        return ()
    if not -len(shape) <= axis < len(shape):
        raise GraphShapeError(
            '{:s} axis {} out of range for shape {}'.format(kind, axis, shape))
    axis = axis % len(shape)
    return shape[:axis] + shape[axis+1:]


def _expand(adjoint, shape, axis):
    """ Broadcasts a reduced adjoint back to <shape>. """
    if axis is not None:
        adjoint = np.expand_dims(adjoint, axis)
    return np.broadcast_to(adjoint, shape).copy()


class SumReduce(Primitive):
    kind, arity = 'sum', 1

    def shape(self, shapes, axis=None):
        return _reduced_shape(shapes[0], axis, self.kind)

    def forward(self, a, axis=None):
        return np.sum(a, axis=axis)

    def backward(self, adjoint, output, values, axis=None):
        return (_expand(adjoint, values[0].shape, axis),)


class MeanReduce(Primitive):
    kind, arity = 'mean', 1

    def shape(self, shapes, axis=None):
        return _reduced_shape(shapes[0], axis, self.kind)

    def forward(self, a, axis=None):
        return np.mean(a, axis=axis)

    def backward(self, adjoint, output, values, axis=None):
        a = values[0]
        count = a.size if axis is None else a.shape[axis]
        return (_expand(adjoint, a.shape, axis) / count,)


def stable_softmax(a, axis):
    """ Softmax along <axis> with max-subtraction. """
    shifted = a - np.max(a, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


class LogSumExp(Primitive):
    kind, arity = 'logsumexp', 1

    def shape(self, shapes, axis=None):
        return _reduced_shape(shapes[0], axis, self.kind)

    def forward(self, a, axis=None):
        m = np.max(a, axis=axis, keepdims=True)
        total = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
        return np.squeeze(total, axis=axis) if axis is not None else total.reshape(())

    def backward(self, adjoint, output, values, axis=None):
        a = values[0]
        if axis is None:
            weights = stable_softmax(a.ravel(), 0).reshape(a.shape)
        else:
            weights = stable_softmax(a, axis)
        return (_expand(adjoint, a.shape, axis) * weights,)


class Softmax(Primitive):
    kind, arity = 'softmax', 1

    def shape(self, shapes, axis=-1):
        _reduced_shape(shapes[0], axis, self.kind)
        return shapes[0]

    def forward(self, a, axis=-1):
        return stable_softmax(a, axis)

    def backward(self, adjoint, output, values, axis=-1):
        inner = np.sum(adjoint * output, axis=axis, keepdims=True)
        return (output * (adjoint - inner),)


class BroadcastScalar(Primitive):
    """ Broadcasts a shape-() input to a fixed output shape. """
    kind, arity = 'broadcast', 1

    def shape(self, shapes, shape=()):
        if shapes[0] != ():
            raise GraphShapeError(
                'broadcast requires a scalar input, got {}'.format(shapes[0]))
        return tuple(shape)

    def forward(self, a, shape=()):
        return np.full(shape, a, dtype=np.float64)

    def backward(self, adjoint, output, values, shape=()):
        return (np.asarray(np.sum(adjoint)),)


PRIMITIVES = {p.kind: p for p in (
    Add(), Subtract(), Multiply(), MatMul(), Affine(), Relu(), Tanh(), Exp(),
    Log(), Negate(), Square(), SumReduce(), MeanReduce(), LogSumExp(),
    Softmax(), GaussianLogDensity(), BroadcastScalar())}

from collections import OrderedDict, namedtuple
import numpy as np

from ..exceptions import GraphShapeError, NonFiniteError
from .primitives import PRIMITIVES


Node = namedtuple('Node', ('kind', 'inputs', 'shape', 'attrs'))


class ComputationGraph:
    """
    Directed acyclic graph of primitive numerical operations. Nodes are appended in topological order by the builder methods, each of which validates shapes and returns the new node id.

    Attributes:

        nodes (list of Node) - ordered nodes; leaves have kind 'leaf'

        leaves (OrderedDict) - {slot name: node id} pairs

        constants (dict) - {slot name: np.ndarray} fixed bindings

        output (int) - designated output node id

    """

    def __init__(self):
        self.nodes = []
        self.leaves = OrderedDict()
        self.constants = {}
        self.output = None

    def __len__(self):
        return len(self.nodes)

    def shape_of(self, node):
        """ Returns declared shape of <node>. """
        return self.nodes[node].shape

    # ============================== LEAVES ===================================

    def leaf(self, name, shape):
        """
        Declare a named input slot.

        Args:

            name (str) - slot name

            shape (tuple) - slot shape

        Returns:

            node (int)

        """
        if name in self.leaves:
            raise GraphShapeError('Duplicate leaf "{:s}".'.format(name))
        self.nodes.append(Node('leaf', (), tuple(shape), {'name': name}))
        self.leaves[name] = len(self.nodes) - 1
        return self.leaves[name]

    def constant(self, value, name=None):
        """ Declare a leaf whose binding is fixed to <value>. """
        value = np.asarray(value, dtype=np.float64)
        if name is None:
            name = '_const{:d}'.format(len(self.constants))
        node = self.leaf(name, value.shape)
        self.constants[name] = value
        return node

    # ============================== BUILDER ==================================

    def apply(self, kind, *inputs, **attrs):
        """
        Append a primitive node.

        Args:

            kind (str) - op-kind

            inputs (int) - input node ids

            attrs: op attributes

        Returns:

            node (int)

        """
        primitive = PRIMITIVES[kind]
        if len(inputs) != primitive.arity:
            raise GraphShapeError('{:s} expects {:d} inputs, got {:d}'.format(
                kind, primitive.arity, len(inputs)), node=len(self.nodes))
        for i in inputs:
            if not 0 <= i < len(self.nodes):
                raise GraphShapeError('Unknown input node {}'.format(i))
        shapes = tuple(self.nodes[i].shape for i in inputs)
        try:
            shape = primitive.shape(shapes, **attrs)
        except GraphShapeError as error:
            raise GraphShapeError('node {:d}: {}'.format(
                len(self.nodes), error), node=len(self.nodes)) from None
        self.nodes.append(Node(kind, tuple(inputs), tuple(shape), attrs))
        return len(self.nodes) - 1

    def add(self, a, b):
        return self.apply('add', a, b)

    def subtract(self, a, b):
        return self.apply('subtract', a, b)

    def multiply(self, a, b):
        return self.apply('multiply', a, b)

    def matmul(self, a, b):
        return self.apply('matmul', a, b)

    def affine(self, x, w, b):
        return self.apply('affine', x, w, b)

    def relu(self, a):
        return self.apply('relu', a)

    def tanh(self, a):
        return self.apply('tanh', a)

    def exp(self, a):
        return self.apply('exp', a)

    def log(self, a):
        return self.apply('log', a)

    def negate(self, a):
        return self.apply('negate', a)

    def square(self, a):
        return self.apply('square', a)

    def sum(self, a, axis=None):
        return self.apply('sum', a, axis=axis)

    def mean(self, a, axis=None):
        return self.apply('mean', a, axis=axis)

    def logsumexp(self, a, axis=None):
        return self.apply('logsumexp', a, axis=axis)

    def softmax(self, a, axis=-1):
        return self.apply('softmax', a, axis=axis)

    def gaussian_log_density(self, x, mean, log_std):
        return self.apply('gaussian_log_density', x, mean, log_std)

    def broadcast(self, a, shape):
        return self.apply('broadcast', a, shape=tuple(shape))

    def scale(self, a, factor):
        """ Multiply <a> by a constant <factor>. """
        const = self.constant(np.full(self.shape_of(a), factor))
        return self.multiply(a, const)

    def set_output(self, node):
        """ Designate <node> as the graph output. """
        self.output = node
        return node


# ============================== EVALUATION ===================================


def _resolve(graph, bindings):
    """ Returns complete, shape-checked leaf values. """
    values = {}
    for name, node in graph.leaves.items():
        if name in graph.constants:
            value = graph.constants[name]
        elif name in bindings:
            value = np.asarray(bindings[name], dtype=np.float64)
        else:
            raise GraphShapeError(
                'No binding for leaf "{:s}".'.format(name), node=node)
        if value.shape != graph.nodes[node].shape:
            raise GraphShapeError(
                'Leaf "{:s}" (node {:d}) expects shape {}, got {}.'.format(
                    name, node, graph.nodes[node].shape, value.shape),
                node=node)
        values[node] = value
    return values


def forward(graph, bindings, check_finite=True):
    """
    Evaluate every node of <graph>.

    Args:

        graph (ComputationGraph)

        bindings (dict) - {slot name: np.ndarray} pairs

        check_finite (bool) - if True, raise on the first non-finite node value

    Returns:

        values (list of np.ndarray) - value of each node, by node id

    """
    leaf_values = _resolve(graph, bindings)
    values = []
    for i, node in enumerate(graph.nodes):
        if node.kind == 'leaf':
            values.append(leaf_values[i])
            continue
        primitive = PRIMITIVES[node.kind]
        with np.errstate(over='ignore', invalid='ignore'):
            value = primitive.forward(
                *(values[j] for j in node.inputs), **node.attrs)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != node.shape:
            raise GraphShapeError('node {:d} ({:s}) produced shape {}, declared {}'.format(
                i, node.kind, value.shape, node.shape), node=i)
        if check_finite and not np.all(np.isfinite(value)):
            raise NonFiniteError(
                'Non-finite value at node {:d} ({:s}).'.format(i, node.kind),
                node=i)
        values.append(value)
    return values


def evaluate(graph, bindings, node=None):
    """
    Returns the value of the graph output (or of <node>).

    Args:

        graph (ComputationGraph)

        bindings (dict) - {slot name: np.ndarray} pairs

        node (int) - optional node id, defaults to graph.output

    Returns:

        value (np.ndarray[float])

    """
    node = graph.output if node is None else node
    return forward(graph, bindings)[node]


def backward(graph, values, wrt):
    """
    Reverse pass from a scalar output over precomputed forward <values>.

    Args:

        graph (ComputationGraph)

        values (list of np.ndarray) - forward values

        wrt (iterable of str) - slot names

    Returns:

        gradients (OrderedDict) - {slot name: np.ndarray} pairs

    """
    wrt = list(wrt)
    for name in wrt:
        if name not in graph.leaves:
            raise KeyError('Unknown slot "{:s}".'.format(name))
    if graph.nodes[graph.output].shape != ():
        raise GraphShapeError('Gradient requires a scalar output, got shape {}.'.format(
            graph.nodes[graph.output].shape), node=graph.output)

    adjoints = [None] * len(graph.nodes)
    adjoints[graph.output] = np.ones(())
    for i in range(graph.output, -1, -1):
        node = graph.nodes[i]
        if adjoints[i] is None or node.kind == 'leaf':
            continue
        inputs = tuple(values[j] for j in node.inputs)
        grads = PRIMITIVES[node.kind].backward(
            adjoints[i], values[i], inputs, **node.attrs)
        for j, g in zip(node.inputs, grads):
            adjoints[j] = g if adjoints[j] is None else adjoints[j] + g

    gradients = OrderedDict()
    for name in wrt:
        node = graph.leaves[name]
        g = adjoints[node]
        gradients[name] = np.zeros(graph.nodes[node].shape) if g is None else np.asarray(g)
    return gradients


def gradient(graph, bindings, wrt):
    """
    Exact reverse-mode gradient of the scalar graph output.

    Args:

        graph (ComputationGraph)

        bindings (dict) - {slot name: np.ndarray} pairs

        wrt (iterable of str) - slot names

    Returns:

        gradients (OrderedDict) - {slot name: np.ndarray}; unreferenced slots receive zeros

    """
    return backward(graph, forward(graph, bindings), wrt)

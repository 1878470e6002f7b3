from collections import OrderedDict
import numpy as np

from ..exceptions import GraphShapeError
from ..gradengine.graph import ComputationGraph, evaluate
from ..distributions.gaussian import DiagonalGaussian, reparameterize_node
from ..distributions.noise import NoiseSource


ACTIVATIONS = ('tanh', 'relu')
HEADS = ('gaussian', 'categorical')

# initial log_std of stochastic weights
INIT_LOG_STD = -5.


class NetworkSpec:
    """
    Architecture of a small fully connected network.

    Attributes:

        layer_sizes (list of int) - widths including input and output, e.g. [1, 32, 32, 1]

        activations (list of str) - activation of each hidden layer ('tanh' or 'relu')

        head (str) - 'gaussian' regression or 'categorical' classification

        noise_std (float) - observation noise of the gaussian head

        n_classes (int) - number of classes of the categorical head

        bayes_last_layer (bool) - if True, the final layer carries a mean-field Gaussian posterior

        bayes_all_layers (bool) - if True, every layer carries a mean-field Gaussian posterior

        input_shape (tuple) - shape of a single input (flattened to layer_sizes[0])

    """

    def __init__(self, layer_sizes, activations=None,
                 head='gaussian',
                 noise_std=0.2,
                 n_classes=None,
                 bayes_last_layer=True,
                 bayes_all_layers=False,
                 input_shape=None):

        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or min(layer_sizes) < 1:
            raise ValueError('A network needs at least one layer of positive width.')
        if activations is None:
            activation = 'tanh' if head == 'gaussian' else 'relu'
            activations = [activation] * (len(layer_sizes) - 2)
        activations = list(activations)
        if len(activations) != len(layer_sizes) - 2:
            raise ValueError('Expected {:d} activations, got {:d}.'.format(
                len(layer_sizes) - 2, len(activations)))
        if set(activations) - set(ACTIVATIONS):
            raise ValueError('Activations must be tanh or relu.')
        if head not in HEADS:
            raise ValueError('Unknown head "{}".'.format(head))
        if head == 'gaussian' and not noise_std > 0:
            raise ValueError('noise_std must be positive.')
        if head == 'categorical':
            n_classes = layer_sizes[-1] if n_classes is None else int(n_classes)
            if n_classes != layer_sizes[-1]:
                raise ValueError('Output width must equal n_classes.')
        input_shape = (layer_sizes[0],) if input_shape is None else tuple(input_shape)
        if int(np.prod(input_shape)) != layer_sizes[0]:
            raise ValueError('Input shape {} does not flatten to {:d}.'.format(
                input_shape, layer_sizes[0]))

        self.layer_sizes = layer_sizes
        self.activations = activations
        self.head = head
        self.noise_std = float(noise_std)
        self.n_classes = n_classes
        self.bayes_last_layer = bool(bayes_last_layer)
        self.bayes_all_layers = bool(bayes_all_layers)
        self.input_shape = input_shape

    def __repr__(self):
        return 'NetworkSpec({}, head={:s})'.format(self.layer_sizes, self.head)

    @property
    def n_layers(self):
        return len(self.layer_sizes) - 1

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    @property
    def is_bayesian(self):
        return self.bayes_last_layer or self.bayes_all_layers

    def is_stochastic(self, layer):
        """ True if <layer> carries a Gaussian posterior. """
        if self.bayes_all_layers:
            return True
        return self.bayes_last_layer and layer == self.n_layers - 1

    def layer_shapes(self, layer):
        """ Returns (weight shape, bias shape) of <layer>. """
        fan_in, fan_out = self.layer_sizes[layer], self.layer_sizes[layer+1]
        return (fan_in, fan_out), (fan_out,)

    def to_dict(self):
        return dict(layer_sizes=self.layer_sizes,
                    activations=self.activations,
                    head=self.head,
                    noise_std=self.noise_std,
                    n_classes=self.n_classes,
                    bayes_last_layer=self.bayes_last_layer,
                    bayes_all_layers=self.bayes_all_layers,
                    input_shape=list(self.input_shape))

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


class ModelState:
    """
    Learnable parameters of a network.

    Deterministic layers hold 'layer<i>.W' and 'layer<i>.b'. Stochastic layers hold the mean and log_std of each, e.g. 'layer<i>.W.mean' and 'layer<i>.W.log_std'.

    Attributes:

        spec (NetworkSpec)

        params (OrderedDict) - {name: np.ndarray} pairs

    """

    def __init__(self, spec, params):
        self.spec = spec
        expected = OrderedDict(_parameter_shapes(spec))
        if set(expected) != set(params):
            raise ValueError('Parameters {} do not match the network.'.format(
                sorted(set(expected) ^ set(params))))
        self.params = OrderedDict()
        for name, shape in expected.items():
            value = np.asarray(params[name], dtype=np.float64)
            if value.shape != shape:
                raise ValueError('{:s} has shape {}, expected {}.'.format(
                    name, value.shape, shape))
            self.params[name] = value

    def __eq__(self, other):
        return (isinstance(other, ModelState)
                and list(self.params) == list(other.params)
                and all(np.array_equal(self.params[k], other.params[k]) for k in self.params))

    @classmethod
    def initialize(cls, spec, seed=0):
        """
        Fan-in scaled uniform weights and zero biases. Stochastic layers start with log_std = -5.

        Args:

            spec (NetworkSpec)

            seed (int) - initialization seed

        Returns:

            state (ModelState)

        """
        noise = NoiseSource(seed).child('init')
        params = OrderedDict()
        for layer in range(spec.n_layers):
            w_shape, b_shape = spec.layer_shapes(layer)
            bound = 1. / np.sqrt(w_shape[0])
            w = noise.child(layer).uniform(-bound, bound, w_shape)
            b = np.zeros(b_shape)
            prefix = 'layer{:d}'.format(layer)
            if spec.is_stochastic(layer):
                params[prefix + '.W.mean'] = w
                params[prefix + '.W.log_std'] = np.full(w_shape, INIT_LOG_STD)
                params[prefix + '.b.mean'] = b
                params[prefix + '.b.log_std'] = np.full(b_shape, INIT_LOG_STD)
            else:
                params[prefix + '.W'] = w
                params[prefix + '.b'] = b
        return cls(spec, params)

    @property
    def stochastic_blocks(self):
        """ Names of stochastic weight blocks, e.g. ['layer2.W', 'layer2.b']. """
        return [name for name, _ in _stochastic_shapes(self.spec)]

    @property
    def theta_dim(self):
        """ Number of stochastic weights. """
        return int(sum(np.prod(shape) for _, shape in _stochastic_shapes(self.spec)))

    def split_noise(self, theta_noise):
        """ Splits a flat standard-normal vector into per-block noise arrays. """
        if self.theta_dim == 0:
            if theta_noise is not None and np.size(theta_noise) > 0:
                raise ValueError('Network has no stochastic weights.')
            return OrderedDict()
        if theta_noise is None:
            raise ValueError('theta_noise is required for a Bayesian network.')
        theta_noise = np.asarray(theta_noise, dtype=np.float64).ravel()
        if theta_noise.size != self.theta_dim:
            raise ValueError('theta_noise has {:d} entries, expected {:d}.'.format(
                theta_noise.size, self.theta_dim))
        blocks, start = OrderedDict(), 0
        for name, shape in _stochastic_shapes(self.spec):
            size = int(np.prod(shape))
            blocks[name] = theta_noise[start:start+size].reshape(shape)
            start += size
        return blocks

    def q_theta(self):
        """ Returns q(theta) over the stochastic weights as one flat DiagonalGaussian. """
        means, log_stds = [], []
        for name, _ in _stochastic_shapes(self.spec):
            means.append(self.params[name + '.mean'].ravel())
            log_stds.append(self.params[name + '.log_std'].ravel())
        if not means:
            return DiagonalGaussian([], [])
        return DiagonalGaussian(np.concatenate(means), np.concatenate(log_stds))

    def theta_gradient(self, dmean, dlog_std):
        """ Splits flat gradients over q(theta) into per-parameter arrays. """
        grads, start = OrderedDict(), 0
        for name, shape in _stochastic_shapes(self.spec):
            size = int(np.prod(shape))
            grads[name + '.mean'] = dmean[start:start+size].reshape(shape)
            grads[name + '.log_std'] = dlog_std[start:start+size].reshape(shape)
            start += size
        return grads

    def replace(self, params):
        """ Returns a new state with some parameters replaced. """
        updated = OrderedDict(self.params)
        updated.update(params)
        return ModelState(self.spec, updated)

    def to_dict(self):
        return dict(spec=self.spec.to_dict(),
                    params={k: v.tolist() for k, v in self.params.items()})

    @classmethod
    def from_dict(cls, data):
        spec = NetworkSpec.from_dict(data['spec'])
        return cls(spec, OrderedDict((k, np.asarray(v)) for k, v in data['params'].items()))


def _stochastic_shapes(spec):
    for layer in range(spec.n_layers):
        if spec.is_stochastic(layer):
            w_shape, b_shape = spec.layer_shapes(layer)
            yield 'layer{:d}.W'.format(layer), w_shape
            yield 'layer{:d}.b'.format(layer), b_shape


def _parameter_shapes(spec):
    for layer in range(spec.n_layers):
        w_shape, b_shape = spec.layer_shapes(layer)
        prefix = 'layer{:d}'.format(layer)
        if spec.is_stochastic(layer):
            for block, shape in (('.W', w_shape), ('.b', b_shape)):
                yield prefix + block + '.mean', shape
                yield prefix + block + '.log_std', shape
        else:
            yield prefix + '.W', w_shape
            yield prefix + '.b', b_shape


# ============================= GRAPH BUILDING ================================


def build_network(graph, spec, x):
    """
    Appends the network to <graph>.

    Args:

        graph (ComputationGraph)

        spec (NetworkSpec)

        x (int) - input node of shape (..., layer_sizes[0])

    Returns:

        output (int) - node of shape (..., output_dim)

    """
    h = x
    for layer in range(spec.n_layers):
        w_shape, b_shape = spec.layer_shapes(layer)
        prefix = 'layer{:d}'.format(layer)
        if spec.is_stochastic(layer):
            w = reparameterize_node(graph, prefix + '.W', w_shape)
            b = reparameterize_node(graph, prefix + '.b', b_shape)
        else:
            w = graph.leaf(prefix + '.W', w_shape)
            b = graph.leaf(prefix + '.b', b_shape)
        h = graph.affine(h, w, b)
        if layer < spec.n_layers - 1:
            h = graph.tanh(h) if spec.activations[layer] == 'tanh' else graph.relu(h)
    return h


def network_bindings(state, theta_noise):
    """ Returns graph bindings for the parameters and the theta noise. """
    bindings = dict(state.params)
    for name, eps in state.split_noise(theta_noise).items():
        bindings[name + '.noise'] = eps
    return bindings


def flatten_inputs(spec, x):
    """ Reshapes inputs of shape (..., *input_shape) to (..., layer_sizes[0]). """
    x = np.asarray(x, dtype=np.float64)
    n = len(spec.input_shape)
    if x.shape[x.ndim-n:] != spec.input_shape:
        raise GraphShapeError('Input has shape {}, network expects trailing shape {}.'.format(
            x.shape, spec.input_shape))
    return x.reshape(x.shape[:x.ndim-n] + (spec.layer_sizes[0],))


def network_graph(spec, batch_shape):
    """ Returns a graph whose output is the network applied to leaf 'x'. """
    graph = ComputationGraph()
    x = graph.leaf('x', tuple(batch_shape) + (spec.layer_sizes[0],))
    graph.set_output(build_network(graph, spec, x))
    return graph


def forward(state, theta_noise, x):
    """
    Network output (regression mean or class logits).

    Args:

        state (ModelState)

        theta_noise (np.ndarray[float]) - standard normal vector of length state.theta_dim, None for point networks

        x (np.ndarray[float]) - inputs of shape (..., *input_shape)

    Returns:

        output (np.ndarray[float]) - shape (..., output_dim)

    """
    flat = flatten_inputs(state.spec, x)
    graph = network_graph(state.spec, flat.shape[:-1])
    bindings = network_bindings(state, theta_noise)
    bindings['x'] = flat
    return evaluate(graph, bindings)

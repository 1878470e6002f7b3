class OptimaError(Exception):
    """ Base class for all errors raised by the optima package. """


class GraphShapeError(OptimaError, ValueError):
    """
    Raised when a graph node's inputs are inconsistent with its op-kind.

    Attributes:

        node (int) - offending node id (None when a leaf binding is at fault)

    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NonFiniteError(OptimaError, FloatingPointError):
    """
    Raised when a computation produces a non-finite value.

    Attributes:

        node (int) - offending node id, if raised inside a graph

        block (str) - offending parameter block, if raised by an optimizer

    """

    def __init__(self, message, node=None, block=None):
        super().__init__(message)
        self.node = node
        self.block = block


class DegenerateLikelihoodError(OptimaError, FloatingPointError):
    """
    Raised when every Monte Carlo log-likelihood sample is -inf.

    Attributes:

        index (int) - batch position of the degenerate example, if known

    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotPositiveDefiniteError(OptimaError, ValueError):
    """ Raised when a matrix expected to be SPD is not. """


class DataFormatError(OptimaError, ValueError):
    """
    Raised when a dataset file cannot be parsed.

    Attributes:

        line (int) - 1-based line number of the offending line

    """

    def __init__(self, message, line=None):
        if line is not None:
            message = 'line {:d}: {:s}'.format(line, message)
        super().__init__(message)
        self.line = line


class ConfigError(OptimaError, ValueError):
    """
    Raised when a run configuration violates the schema.

    Attributes:

        path (str) - dotted schema path of the violation

    """

    def __init__(self, message, path=''):
        super().__init__('{:s}: {:s}'.format(path or '<root>', message))
        self.path = path


class TrainingError(OptimaError, RuntimeError):
    """
    Raised when training must abort.

    Attributes:

        step (int) - optimizer step at which training aborted

        batch (int) - minibatch number within the epoch

        components (dict) - objective components at the failing step

        trace (TrainTrace) - records logged before the abort

    """

    def __init__(self, message, step=None, batch=None, components=None, trace=None):
        details = 'step={}, batch={}, components={}'.format(
            step, batch, components)
        super().__init__('{:s} ({:s})'.format(message, details))
        self.step = step
        self.batch = batch
        self.components = components or {}
        self.trace = trace


class VerificationError(OptimaError, AssertionError):
    """
    Raised when one or more hard theory checks fail.

    Attributes:

        failed (list of str) - names of failed checks

    """

    def __init__(self, failed):
        super().__init__('Failed checks: {:s}'.format(', '.join(failed)))
        self.failed = list(failed)

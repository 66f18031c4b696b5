"""Exception hierarchy shared by all modules."""


class AlphaODEError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(AlphaODEError, ValueError):
    pass


class UnboundParameter(AlphaODEError, ValueError):
    def __init__(self, name):
        super().__init__(f"parameter {name!r} is referenced but not bound")
        self.name = name


class MalformedExpression(AlphaODEError, ValueError):
    pass


class DomainError(AlphaODEError, ArithmeticError):
    """An elementary operation was evaluated outside its domain.

    ``node`` is the offending sub-expression when it is known (tree-walk
    evaluation always fills it in).
    """

    def __init__(self, message, node=None):
        if node is not None:
            message = f"{message} at node {node}"
        super().__init__(message)
        self.node = node


class DivergentSeries(AlphaODEError, ArithmeticError):
    """Series terms stopped decreasing at the top orders.

    The step most likely lies outside the local radius of convergence.
    """

    def __init__(self, message, variables=(), suggested_step=None):
        if suggested_step is not None:
            message = f"{message}; try halving the step (h = {suggested_step:g})"
        super().__init__(message)
        self.variables = tuple(variables)
        self.suggested_step = suggested_step


class MaxStepsExceeded(AlphaODEError, RuntimeError):
    pass


class UnsupportedFixture(AlphaODEError, ValueError):
    pass


class MuUnidentified(AlphaODEError, RuntimeError):
    pass

"""
Exception hierarchy for the numerical engine.
"""


class EngineError(Exception):
    """Base class for every error raised by core.engine."""


class ContractError(EngineError):
    """Input rejected or precondition violated.

    ``node`` names the offending grid node (interior index) when one exists.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class OutsideConeError(EngineError):
    """Operator evaluated outside the closure of its admissible cone."""

    def __init__(self, message, shortfall=None):
        super().__init__(message)
        self.shortfall = shortfall


class ExprSyntaxError(EngineError):
    """Expression text does not match the grammar."""

    def __init__(self, message, position):
        super().__init__(f'{message} at position {position}')
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    """Variable or function name outside the allowed set."""

    def __init__(self, name, position):
        super().__init__(f"unknown identifier '{name}'", position)
        self.name = name


class EvaluationFault(EngineError):
    """Arithmetic domain error while evaluating an expression node."""

    def __init__(self, message, node_text):
        super().__init__(f'{message} in {node_text}')
        self.node_text = node_text

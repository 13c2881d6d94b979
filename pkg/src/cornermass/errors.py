"""Exception types shared by the modules."""


class CornerMassError(Exception):
    """Base class."""


class ConfigError(CornerMassError):
    pass


class DataIntegrityError(CornerMassError):
    def __init__(self, msg, node=None):
        super().__init__(msg if node is None else f"{msg} at node {node}")
        self.node = node


class NotClosed(CornerMassError):
    def __init__(self, name, circulation, gate):
        super().__init__(f"{name} is not closed: max cell circulation "
                         f"{circulation:.3e} exceeds gate {gate:.3e}")
        self.circulation = circulation
        self.gate = gate


class ConsistencyError(CornerMassError):
    pass


class PreconditionError(CornerMassError):
    pass


class GlueError(CornerMassError):
    def __init__(self, msg, location=None):
        super().__init__(msg if location is None else f"{msg} (worst at {location})")
        self.location = location


class CollarError(CornerMassError):
    def __init__(self, msg, location=None):
        super().__init__(msg if location is None else f"{msg} (at {location})")
        self.location = location


class SolverError(CornerMassError):
    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = list(history or [])


class AxisSingularityError(CornerMassError):
    pass


class StageError(CornerMassError):
    """A pipeline stage failed; the original error is kept as ``cause``."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause

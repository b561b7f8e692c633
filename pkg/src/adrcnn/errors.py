"""Exception types raised across the package."""


class AdrCnnError(Exception):
    """Base class for all package errors."""


class CorpusFormatError(AdrCnnError, ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class EmbeddingFormatError(AdrCnnError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ShapeError(AdrCnnError, ValueError):
    """A tensor does not fit the layer it is fed into."""


class NonFiniteGradientError(AdrCnnError, FloatingPointError):
    def __init__(self, name, batch=None):
        self.name = name
        self.batch = batch
        at = f" at batch {batch}" if batch is not None else ""
        super().__init__(f"non-finite gradient in {name!r}{at}")


class CheckpointError(AdrCnnError, ValueError):
    pass


class ExperimentError(AdrCnnError, RuntimeError):
    def __init__(self, message, fold=None, stage=None):
        self.message = message
        self.fold = fold
        self.stage = stage
        super().__init__(f"fold {fold}, stage {stage}: {message}")

    def __reduce__(self):
        # raised inside worker processes
        return type(self), (self.message, self.fold, self.stage)

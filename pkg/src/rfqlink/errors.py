"""Exception hierarchy shared by all modules.

``InputError`` covers malformed files and arguments, ``AnalysisError`` covers
well-formed data that cannot be analysed.  The CLI maps them to exit codes
1 and 2.
"""


class RFQLinkError(ValueError):
    pass


class InputError(RFQLinkError):
    pass


class TouchstoneError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AnalysisError(RFQLinkError):
    pass


class SingularMatrixError(AnalysisError):
    def __init__(self, message, freq=None):
        self.freq = freq
        if freq is not None:
            message = f"{message} at f = {freq:.12g} Hz"
        super().__init__(message)

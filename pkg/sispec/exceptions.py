"""Error hierarchy shared by the library and the command line.

Each class carries the process exit code the CLI uses when the error
escapes a subcommand: 1 for validation failures, 2 for numerical
failures and 3 for I/O problems.
"""

EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class SispecError(Exception):
    exit_code = EXIT_VALIDATION


# Validation


class ConfigError(SispecError, ValueError):
    pass


class InvalidMesh(SispecError, ValueError):
    pass


class MeshValidationError(SispecError, ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"Mesh failed validation: {report.summary()}")


class DegenerateFace(SispecError, ValueError):
    def __init__(self, faces, epsilon):
        self.faces = list(faces)
        self.epsilon = epsilon
        preview = ", ".join(str(f) for f in self.faces[:10])
        super().__init__(
            f"{len(self.faces)} face(s) with area <= {epsilon:.3e}: "
            f"{preview}"
        )


class SeedOutOfRange(SispecError, IndexError):
    pass


class AlphaOutOfRange(SispecError, ValueError):
    pass


class DimensionMismatch(SispecError, ValueError):
    pass


class MeshMismatch(SispecError, ValueError):
    pass


class EmptyTimes(SispecError, ValueError):
    pass


class EmptyDomainList(SispecError, ValueError):
    pass


class GroundTruthMismatch(SispecError, ValueError):
    pass


class DisconnectedMesh(SispecError, ValueError):
    def __init__(self, unreachable):
        self.unreachable = list(unreachable)
        super().__init__(
            f"{len(self.unreachable)} vertices unreachable from the source, "
            f"e.g. {self.unreachable[:10]}"
        )


# Numerical


class NumericalError(SispecError, ArithmeticError):
    exit_code = EXIT_NUMERICAL


class ConvergenceFailure(NumericalError):
    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (achieved residual {residual:.3e})")


class NotPositiveDefinite(NumericalError):
    pass


class IllConditionedFit(NumericalError):
    pass


class AllZeroCurvature(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class NonFiniteGradient(NumericalError):
    pass


# I/O


class ParseError(SispecError, ValueError):
    exit_code = EXIT_IO

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class UnsupportedFormat(SispecError, ValueError):
    exit_code = EXIT_IO


class CacheFormatError(SispecError, ValueError):
    exit_code = EXIT_IO

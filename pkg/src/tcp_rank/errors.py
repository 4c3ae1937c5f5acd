"""Exception hierarchy shared by every module of the package."""


class TcpRankError(Exception):
    """Base class for all package errors."""


class DataError(TcpRankError):
    """Problem with an ingested dataset. Carries an optional file/record location."""

    def __init__(self, message, path=None, record=None):
        self.path = path
        self.record = record
        where = []
        if path is not None:
            where.append(str(path))
        if record is not None:
            where.append(f"record {record}")
        if where:
            message = f"{':'.join(where)}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class RangeError(DataError, ValueError):
    pass


class ConsistencyError(DataError):
    pass


class DimensionError(TcpRankError, ValueError):
    pass


class NoFailuresError(TcpRankError, ValueError):
    pass


class EmptyInputError(TcpRankError, ValueError):
    pass


class TooFewSamplesError(TcpRankError, ValueError):
    pass


class NoPositivesError(TcpRankError, ValueError):
    pass


class DegenerateDataError(TcpRankError, ValueError):
    pass


class NonFiniteInputError(TcpRankError, ValueError):
    pass


class SpecError(TcpRankError, ValueError):
    """Invalid synthetic-generator specification."""


class ConfigError(TcpRankError, ValueError):
    pass

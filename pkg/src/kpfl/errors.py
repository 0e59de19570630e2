"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class KpflError(Exception):
    exit_code = 1


class ConfigError(KpflError, ValueError):
    exit_code = 2


class DataError(KpflError, ValueError):
    exit_code = 3


class InfeasibleError(KpflError):
    exit_code = 4


class BackendError(KpflError, RuntimeError):
    exit_code = 5

class LabError(Exception):
    """Raiz de todos os erros do laboratório; a CLI converte-os numa linha de diagnóstico."""


class ConfigError(LabError):
    pass


class DomainError(LabError, ValueError):
    """Argumento fora do domínio físico/matemático (r <= 0, UAV dentro de um edifício...)."""


class ShapeError(LabError, ValueError):
    pass


class GenerationError(LabError):
    pass


class NoSignalError(LabError):
    """Canal nulo: o slot não tem feixe ótimo definido."""


class DatasetFormatError(LabError):
    pass


class BadMagicError(DatasetFormatError):
    pass


class BadVersionError(DatasetFormatError):
    pass


class TruncatedError(DatasetFormatError):
    pass


class ManifestMismatchError(DatasetFormatError):
    pass


class BeamIndexError(LabError, IndexError):
    pass

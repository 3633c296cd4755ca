"""Shared exception types."""


class ContractViolation(ValueError):
    """An argument violates an operation's precondition (e.g. shape mismatch)."""


class IntractableError(RuntimeError):
    """Exact enumeration was requested beyond the supported size."""


class EmbeddingError(RuntimeError):
    """No valid hardware placement exists, or an embedding invariant is broken."""


class ConfigError(ValueError):
    """A config file is malformed; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")

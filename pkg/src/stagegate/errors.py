"""Shared exception types.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can map failures without string matching.
"""

from __future__ import annotations


class StagegateError(Exception):
    """Base class; ``code`` is the machine-parsable identifier."""

    code = "StagegateError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class IllegalTransition(StagegateError):
    code = "IllegalTransition"

    def __init__(self, from_state: str, to_desc: str):
        self.from_state = from_state
        self.to_desc = to_desc
        super().__init__(f"illegal transition from {from_state} via {to_desc}")


class StaleSequence(StagegateError):
    code = "StaleSequence"


class NotKilled(StagegateError):
    code = "NotKilled"


class MissingAuthorization(StagegateError):
    code = "MissingAuthorization"


class UnknownCandidate(StagegateError):
    code = "UnknownCandidate"


class NotFound(StagegateError):
    code = "NotFound"


class CorruptRecord(StagegateError):
    code = "CorruptRecord"


class BackendUnavailable(StagegateError):
    code = "BackendUnavailable"


class DispatchTimeout(StagegateError):
    code = "Timeout"


class RosterIncomplete(StagegateError):
    code = "RosterIncomplete"


class RosterInvalid(StagegateError):
    code = "RosterInvalid"


class SameFamilyCritic(StagegateError):
    code = "SameFamilyCritic"


class OverlappingScopes(StagegateError):
    code = "OverlappingScopes"


class MissingSelfCritique(StagegateError):
    code = "MissingSelfCritique"


class MissingValidation(StagegateError):
    code = "MissingValidation"


class ContaminatedCheck(StagegateError):
    code = "ContaminatedCheck"


class ProvisioningFailure(StagegateError):
    code = "ProvisioningFailure"


class MalformedVector(StagegateError):
    code = "MalformedVector"


class DanglingIncident(StagegateError):
    code = "DanglingIncident"


class EmptyWave(StagegateError):
    code = "EmptyWave"


class NoReleaseBranch(StagegateError):
    code = "NoReleaseBranch"


class TooLargeToEnumerate(StagegateError):
    code = "TooLargeToEnumerate"


class InvalidWorld(StagegateError):
    code = "InvalidWorld"


class ConfigError(StagegateError):
    code = "ConfigError"

"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` (the class name) and an
optional ``witness`` payload that reports can serialize.
"""

from __future__ import annotations

from typing import Any


class LocalGpdError(Exception):
    def __init__(self, message: str = "", witness: Any = None):
        super().__init__(message or self.__class__.__name__)
        self.witness = witness

    @property
    def code(self) -> str:
        return self.__class__.__name__


class InputError(LocalGpdError):
    """Malformed or inconsistent input; maps to CLI exit code 2."""


class ParseError(InputError):
    pass


class SchemaError(InputError):
    pass


class ResourceCap(InputError):
    pass


# fintop
class UnknownPoint(InputError):
    pass


class DuplicateOpen(InputError):
    pass


class MissingEmptyOrWhole(InputError):
    pass


class ClosureViolation(InputError):
    pass


class TargetMismatch(InputError):
    pass


# presheaf
class IdentityLawViolation(InputError):
    pass


class CompositionLawViolation(InputError):
    pass


class ElementNotInSet(InputError):
    pass


class IncompatibleAtlas(LocalGpdError):
    pass


class NotGlobal(InputError):
    pass


class NotContinuous(LocalGpdError):
    pass


# groupoid
class AxiomViolation(InputError):
    pass


class NotEquivalence(InputError):
    pass


class NotAction(InputError):
    pass


class UnknownObject(InputError):
    pass


class TopologyRequired(InputError):
    pass


# localsub
class NotWide(InputError):
    pass


class NotSubgroupoid(InputError):
    pass


class CoverIncomplete(InputError):
    pass


class Incompatible(LocalGpdError):
    pass


class BaseMismatch(InputError):
    pass


# holonomy
class NotAdmissible(LocalGpdError):
    pass


class NotStrictlyRegular(LocalGpdError):
    pass


class ConditionFailed(LocalGpdError):
    pass


class NotLocallyTop(LocalGpdError):
    pass


class SectionSearchExhausted(LocalGpdError):
    pass


# gsheaf
class SquareViolation(LocalGpdError):
    pass


class UnitViolation(LocalGpdError):
    pass


class AssocViolation(LocalGpdError):
    pass


class ActionInvalid(LocalGpdError):
    pass


class NotAnAtlas(LocalGpdError):
    pass


class LiftNotUnique(LocalGpdError):
    pass


class LiftMissing(LocalGpdError):
    pass

"""Exception hierarchy shared by every module.

Each error carries an ``exit_code`` so the command line can map failures
onto its documented status codes without inspecting messages.
"""


class QConicError(Exception):
    exit_code = 1


class UsageError(QConicError):
    exit_code = 64


# lattice / toric
class NonCyclicQuotient(QConicError):
    pass


class NonSimplicial(QConicError):
    pass


class NotTerminalCyclic(QConicError):
    pass


class RayOutsideCone(QConicError):
    pass


class BoundaryWall(QConicError):
    pass


class NonCompactCurve(BoundaryWall):
    pass


class NotFlippable(QConicError):
    pass


class AntiflipRejected(QConicError):
    exit_code = 3


class LedgerViolation(QConicError):
    exit_code = 3


# germs
class BirationalTag(QConicError):
    exit_code = 64


class MissingParams(QConicError):
    exit_code = 64


class UnsupportedGerm(QConicError):
    exit_code = 2


class GorensteinNoMd(QConicError):
    exit_code = 64


class BadParameter(QConicError):
    exit_code = 64


class TagParseError(QConicError):
    exit_code = 64


# base surface
class IllegalModification(QConicError):
    pass


class UnknownGraph(QConicError):
    pass


class Undecidable(QConicError):
    exit_code = 4


# series
class WeightMismatch(QConicError):
    pass


class ZeroWithinTruncation(QConicError):
    exit_code = 4


class UndecidableDiscriminant(Undecidable):
    pass


class ScenarioError(QConicError):
    exit_code = 64

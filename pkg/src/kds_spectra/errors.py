"""Exception hierarchy shared by all modules."""


class KdsError(Exception):
    """Base class for every error raised by kds_spectra."""


class NotSubextremal(KdsError):
    pass


class OutOfDomain(KdsError):
    pass


class ResonantFrequency(KdsError):
    """omega sits on (or within the exclusion band of) omega_h * m."""


# the spectrum module talks about "Resonant"
Resonant = ResonantFrequency


class SeriesDiverged(KdsError):
    pass


class NotConverged(KdsError):
    pass


class InvalidMode(KdsError):
    pass


class StepSizeUnderflow(KdsError):
    pass


class StructureViolation(KdsError):
    """More critical points than the potential is allowed to have."""


class EmptySet(KdsError):
    pass


class UnknownRegime(KdsError):
    pass


class GridMismatch(KdsError):
    pass


class PolarSingularity(KdsError):
    pass

"""
Exception hierarchy for the segmented PRUW simulator
"""


class PRUWError(Exception):
    """Base class for all simulator errors"""
    pass


class ConfigurationError(PRUWError):
    """Invalid system parameters or simulation configuration"""
    pass


class FieldArithmeticError(PRUWError, ArithmeticError):
    """Undefined operation in the prime field (e.g. inverting zero)"""
    pass


class DimensionError(PRUWError):
    """Vector or matrix sizes do not match"""
    pass


class UnderdeterminedError(DimensionError):
    """Fewer equations than unknowns in a decoding system"""
    pass


class SingularMatrixError(PRUWError):
    """Linear system has no unique solution"""
    pass


class IndexRangeError(PRUWError, IndexError):
    """Subpacket or segment index outside its valid range"""
    pass


class ProtocolError(PRUWError):
    """A party received input that violates the read/write protocol"""
    pass


class DegreeStructureError(ProtocolError):
    """Stored symbols are no longer of the expected polynomial form"""
    pass


class OracleViolation(PRUWError):
    """Decoded state disagrees with the plaintext shadow model"""
    pass

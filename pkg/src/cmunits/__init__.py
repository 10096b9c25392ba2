"""High-precision CM values of Weierstrass units and numerical certificates
for the relative power integral bases they generate."""

from cmunits.bignum import DomainError, PrecisionError, PrecisionPolicy
from cmunits.cmfield import IQField, make_field
from cmunits.modfunc import CharacterVector, GL2ModN
from cmunits.verifier import Certificate, verify_pib, verify_siegel_ramachandra

__all__ = [
    "Certificate",
    "CharacterVector",
    "DomainError",
    "GL2ModN",
    "IQField",
    "PrecisionError",
    "PrecisionPolicy",
    "make_field",
    "verify_pib",
    "verify_siegel_ramachandra",
]

__version__ = "0.1.0"

"""Hybrid post-quantum SCMS: certificates, butterfly provisioning and signed BSMs."""

from .butterfly import check_unlinkability, run_provisioning
from .cert import (
    CertKind,
    Certificate,
    LengthProfile,
    TbsCertificate,
    cert_length,
    decode_certificate,
    encode_certificate,
    issue_certificate,
    verify_certificate,
)
from .ec import KERNEL, EcPoint
from .errors import ScmsError
from .pki import CertificateChainFile, HierarchyConfig, build_hierarchy, enroll, new_end_entity, verify_chain
from .provider import DEFAULT_PROFILES, CryptoProvider, SchemeId, SchemeProfile, cert_digest, f1_expand
from .spdu import SignerMode, Spdu, Verdict, build_spdu, spdu_length, verify_spdu

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PROFILES",
    "KERNEL",
    "CertKind",
    "Certificate",
    "CertificateChainFile",
    "CryptoProvider",
    "EcPoint",
    "HierarchyConfig",
    "LengthProfile",
    "SchemeId",
    "SchemeProfile",
    "ScmsError",
    "SignerMode",
    "Spdu",
    "TbsCertificate",
    "Verdict",
    "build_hierarchy",
    "build_spdu",
    "cert_digest",
    "cert_length",
    "check_unlinkability",
    "decode_certificate",
    "encode_certificate",
    "enroll",
    "f1_expand",
    "issue_certificate",
    "new_end_entity",
    "run_provisioning",
    "spdu_length",
    "verify_certificate",
    "verify_chain",
    "verify_spdu",
]

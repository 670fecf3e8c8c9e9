import pytest

from pqscms.cert import LengthProfile
from pqscms.errors import DecodeError, KeyMismatch
from pqscms.pki import CertStore, EntityRole, HierarchyConfig, build_hierarchy, issue_for
from pqscms.provider import SchemeId
from pqscms.spdu import (
    BSM_PAYLOAD_LEN,
    DEFAULT_MAX_AGE_US,
    SPDU_FRAMING,
    HeaderInfo,
    SignerIdentifier,
    SignerMode,
    Spdu,
    Verdict,
    build_spdu,
    check_wsm_limit,
    encode_tbs,
    spdu_length,
    verify_spdu,
)

T0 = 1_000_000


@pytest.fixture(scope="module")
def cred(provisioned):
    return provisioned.credentials[0]


def _verify(spdu, hierarchy, provider, store=None, now=T0):
    return verify_spdu(spdu, store if store is not None else CertStore(), hierarchy.ccf, now, DEFAULT_MAX_AGE_US, provider)


def test_full_cert_spdu_is_866_bytes_and_accepted(cred, hierarchy, provider):
    spdu = build_spdu(bytes(BSM_PAYLOAD_LEN), cred.certificate, cred.private_key, SignerMode.FULL_CERT, T0, provider)
    wire = spdu.encode()
    assert len(wire) == 866
    assert Spdu.decode(wire) == spdu
    assert _verify(Spdu.decode(wire), hierarchy, provider) is Verdict.ACCEPT


def test_digest_mode_needs_known_signer(cred, hierarchy, provider):
    spdu = build_spdu(b"x" * BSM_PAYLOAD_LEN, cred.certificate, cred.private_key, SignerMode.DIGEST, T0, provider)
    assert len(spdu.encode()) == SPDU_FRAMING + BSM_PAYLOAD_LEN + 8 + 65
    assert _verify(spdu, hierarchy, provider) is Verdict.UNKNOWN_SIGNER
    store = CertStore([cred.certificate])
    assert _verify(spdu, hierarchy, provider, store) is Verdict.ACCEPT


def test_staleness(cred, hierarchy, provider):
    spdu = build_spdu(b"p", cred.certificate, cred.private_key, SignerMode.FULL_CERT, T0, provider)
    assert _verify(spdu, hierarchy, provider, now=T0 + DEFAULT_MAX_AGE_US) is Verdict.ACCEPT
    assert _verify(spdu, hierarchy, provider, now=T0 + DEFAULT_MAX_AGE_US + 1) is Verdict.STALE


def test_every_tbs_byte_mutation_fails(cred, hierarchy, provider):
    spdu = build_spdu(bytes(range(BSM_PAYLOAD_LEN)), cred.certificate, cred.private_key, SignerMode.FULL_CERT, T0, provider)
    wire = spdu.encode()
    tbs_len = len(spdu.tbs_bytes())
    length_field = range(1 + 12, 1 + 14)  # payload length prefix
    for pos in range(1, 1 + tbs_len):
        mutated = bytearray(wire)
        mutated[pos] ^= 0x01
        if pos in length_field:
            with pytest.raises(DecodeError):
                Spdu.decode(bytes(mutated))
            continue
        assert _verify(Spdu.decode(bytes(mutated)), hierarchy, provider) is Verdict.BAD_SIGNATURE


def test_signature_and_certificate_tampering(cred, hierarchy, provider):
    spdu = build_spdu(b"hello", cred.certificate, cred.private_key, SignerMode.FULL_CERT, T0, provider)
    sig = bytearray(spdu.signature)
    sig[10] ^= 0x80
    assert _verify(Spdu(spdu.header, spdu.payload, spdu.signer, bytes(sig)), hierarchy, provider) is Verdict.BAD_SIGNATURE
    wire = bytearray(spdu.encode())
    cert_start = 1 + len(spdu.tbs_bytes()) + 1
    wire[cert_start + 20] ^= 0x01  # validity start inside the certificate
    assert _verify(Spdu.decode(bytes(wire)), hierarchy, provider) is Verdict.BAD_CHAIN


def test_foreign_hierarchy_is_bad_chain(cred, provider):
    other = build_hierarchy(HierarchyConfig(), provider)
    spdu = build_spdu(b"hello", cred.certificate, cred.private_key, SignerMode.FULL_CERT, T0, provider)
    assert verify_spdu(spdu, CertStore(), other.ccf, T0, provider=provider) is Verdict.BAD_CHAIN


def test_wrong_private_key_refused(cred, provider):
    with pytest.raises(KeyMismatch):
        build_spdu(b"x", cred.certificate, cred.private_key + 1, SignerMode.DIGEST, T0, provider)
    with pytest.raises(KeyMismatch):
        build_spdu(b"x", cred.certificate, provider.generate_signing_keypair(SchemeId.ECDSA_P256), SignerMode.DIGEST, T0, provider)


def test_pqc_signer_with_keypair(hierarchy, provider):
    aca = hierarchy[EntityRole.ACA]
    kp = provider.generate_signing_keypair(SchemeId.FALCON512)
    cert = issue_for(aca, EntityRole.EE, kp.scheme, kp.public_key, 0, 3600, provider, psid=0x20)
    spdu = build_spdu(bytes(BSM_PAYLOAD_LEN), cert, kp, SignerMode.FULL_CERT, T0, provider)
    # live Falcon keys are one byte shorter than the published profile
    assert len(spdu.encode()) == 68 + 34 + len(kp.public_key) + 666 + 666
    assert _verify(spdu, hierarchy, provider) is Verdict.ACCEPT
    with pytest.raises(KeyMismatch):
        build_spdu(b"x", cert, 5, SignerMode.DIGEST, T0, provider)


def test_psid_override(cred, hierarchy, provider):
    spdu = build_spdu(b"x", cred.certificate, cred.private_key, SignerMode.DIGEST, T0, provider, psid=0x7F)
    assert spdu.header.psid == 0x7F
    assert Spdu.decode(spdu.encode()).header.psid == 0x7F


def test_decode_errors(cred, provider):
    spdu = build_spdu(b"x", cred.certificate, cred.private_key, SignerMode.DIGEST, T0, provider)
    wire = spdu.encode()
    with pytest.raises(DecodeError):
        Spdu.decode(wire + b"\x00")
    with pytest.raises(DecodeError):
        Spdu.decode(b"\x04" + wire[1:])
    bad_mode = bytearray(wire)
    bad_mode[1 + len(spdu.tbs_bytes())] = 9
    with pytest.raises(DecodeError):
        Spdu.decode(bytes(bad_mode))


def test_signer_identifier_validation(cred):
    with pytest.raises(ValueError):
        SignerIdentifier(SignerMode.DIGEST)
    with pytest.raises(ValueError):
        SignerIdentifier(SignerMode.DIGEST, certificate=cred.certificate)
    with pytest.raises(ValueError):
        SignerIdentifier(SignerMode.FULL_CERT, digest=bytes(8), certificate=cred.certificate)


def test_tbs_encoding_layout():
    tbs = encode_tbs(HeaderInfo(0x20, 5), b"abc")
    assert tbs == bytes.fromhex("00000020") + (5).to_bytes(8, "big") + b"\x00\x03abc"


def test_length_formula_and_wsm_limit():
    assert spdu_length(LengthProfile(k=33, s1=666, s2=65)) == 866
    assert spdu_length(LengthProfile(k=33, s1=65, s2=65)) == 265
    assert check_wsm_limit(1400) and not check_wsm_limit(1401)
    assert SPDU_FRAMING + BSM_PAYLOAD_LEN == 68

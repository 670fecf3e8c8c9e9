import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import P256_N, oracle_base_mul
from pqscms import ec
from pqscms.butterfly import (
    AcaResponse,
    CertTemplate,
    EeRaCertRequest,
    RaAcaRequest,
    SealedResponse,
    aca_issue,
    aca_seal,
    check_unlinkability,
    decode_archive,
    ee_cocoon_private,
    ee_finalize,
    ee_init_butterfly,
    ee_open_sealed,
    encode_archive,
    ra_expand_cocoon,
    run_provisioning,
)
from pqscms.cert import CertKind, Certificate, verify_certificate
from pqscms.ec import EcPoint
from pqscms.errors import (
    DecodeError,
    DecryptionFailure,
    InvalidCount,
    InvalidPoint,
    KeyMismatch,
    PolicyViolation,
    SignatureInvalid,
)
from pqscms.pki import EntityRole, HierarchyConfig, build_hierarchy, enroll, new_end_entity
from pqscms.provider import CryptoProvider, ExpansionKey, HybridCiphertext, SchemeId, f1_expand


def test_provisioned_keys_match_certificates(provisioned, hierarchy, provider):
    aca_cert = hierarchy[EntityRole.ACA].certificate
    assert [c.index for c in provisioned.credentials] == list(range(8))
    for cred in provisioned.credentials:
        cert = cred.certificate
        assert cert.kind is CertKind.HYBRID
        assert len(cert.encode()) == 733
        assert verify_certificate(cert, aca_cert, provider)
        assert ec.ec_scalar_mul(cred.private_key).encode() == cert.tbs.vki_key
        assert cert.tbs.subject_id == bytes(8)
    assert len({c.certificate.tbs.vki_key for c in provisioned.credentials}) == 8


def test_unlinkability_holds_for_honest_run(provisioned):
    report = check_unlinkability(provisioned)
    assert report.passed, report.lines()


def test_leaked_caterpillar_is_detected(hierarchy, enrolled_ee, provider):
    result = run_provisioning(
        enrolled_ee, hierarchy[EntityRole.RA], hierarchy[EntityRole.ACA], 2, provider, leak_caterpillar=True
    )
    report = check_unlinkability(result)
    assert report.ra_blind_to_randomizers
    assert not report.aca_blind_to_caterpillar
    assert not report.passed


def test_unenrolled_ee_is_refused(hierarchy, provider):
    ee = new_end_entity(hierarchy, "fresh")
    with pytest.raises(PolicyViolation):
        run_provisioning(ee, hierarchy[EntityRole.RA], hierarchy[EntityRole.ACA], 1, provider)


def test_count_must_be_positive(provider):
    with pytest.raises(InvalidCount):
        ee_init_butterfly(0, provider)


@settings(max_examples=50, deadline=None)
@given(
    a=st.integers(1, P256_N - 1),
    r=st.integers(1, P256_N - 1),
    ck=st.binary(min_size=16, max_size=16),
    i=st.integers(0, (1 << 64) - 1),
)
def test_butterfly_identity(a, r, ck, i):
    f = f1_expand(ck, i)
    A, R = ec.ec_scalar_mul(a), ec.ec_scalar_mul(r)
    lhs = oracle_base_mul(a + f + r)
    rhs = ec.ec_point_add(ec.ec_mul_add_base(f, A), R)
    assert lhs == (None if rhs.is_identity else (rhs.x, rhs.y))


def test_cocoon_expansion_matches_private_side():
    rng = random.Random(41)
    for _ in range(50):
        a = rng.randrange(1, P256_N)
        ck = ExpansionKey(rng.randbytes(16))
        i = rng.randrange(1000)
        assert ra_expand_cocoon(ck, ec.ec_scalar_mul(a), i) == ec.ec_scalar_mul(ee_cocoon_private(a, ck, i))


def test_cocoon_rejects_identity_caterpillar():
    with pytest.raises(InvalidPoint):
        ra_expand_cocoon(ExpansionKey(bytes(16)), ec.IDENTITY, 0)


def _manual_response(hierarchy, provider, count=2):
    aca = hierarchy[EntityRole.ACA]
    state = ee_init_butterfly(count, provider)
    tmpl = CertTemplate(0, 3600)
    req = RaAcaRequest(0, ra_expand_cocoon(state.ck, state.A, 0).encode(), state.kem_pairs[0].public_key, tmpl)
    return aca, state, req, aca_issue(aca, req, provider), tmpl


def test_finalize_accepts_honest_response(hierarchy, provider):
    aca, state, req, resp, tmpl = _manual_response(hierarchy, provider)
    priv, cert = ee_finalize(state, 0, resp, aca.certificate, provider, tmpl)
    assert ec.ec_scalar_mul(priv).encode() == cert.tbs.vki_key
    assert AcaResponse.decode(resp.encode()) == resp
    sealed = aca_seal(aca, req, resp, provider)
    assert ee_open_sealed(state, sealed, provider) == resp


def test_finalize_rejects_bad_aca_signature(hierarchy, provider):
    aca, state, _, resp, _ = _manual_response(hierarchy, provider)
    sig = bytearray(resp.aca_signature)
    sig[100] ^= 0x01
    bad = AcaResponse(resp.certificate, resp.r_ciphertext, bytes(sig))
    with pytest.raises(SignatureInvalid):
        ee_finalize(state, 0, bad, aca.certificate, provider)


def test_finalize_detects_wrong_randomizer(hierarchy, provider):
    aca, state, _, resp, _ = _manual_response(hierarchy, provider)
    # re-sign a response whose r decrypts fine but does not match the cert
    wrong_r = provider.kem_encrypt(state.kem_pairs[0].public_key, (5).to_bytes(32, "big"))
    unsigned = AcaResponse(resp.certificate, wrong_r, b"")
    forged = AcaResponse(resp.certificate, wrong_r, provider.sign(aca.keypair, unsigned.signed_part()))
    with pytest.raises(KeyMismatch):
        ee_finalize(state, 0, forged, aca.certificate, provider)


def test_finalize_rejects_wrong_kem_key(hierarchy, provider):
    aca, state, _, resp, _ = _manual_response(hierarchy, provider)
    with pytest.raises(DecryptionFailure):
        ee_finalize(state, 1, resp, aca.certificate, provider)


def test_finalize_rejects_template_change(hierarchy, provider):
    aca, state, _, resp, _ = _manual_response(hierarchy, provider)
    with pytest.raises(PolicyViolation):
        ee_finalize(state, 0, resp, aca.certificate, provider, CertTemplate(0, 60))


def test_aca_refuses_validity_outside_window(hierarchy, provider):
    aca = hierarchy[EntityRole.ACA]
    state = ee_init_butterfly(1, provider)
    end = aca.certificate.tbs.validity_end
    req = RaAcaRequest(0, ra_expand_cocoon(state.ck, state.A, 0).encode(), state.kem_pairs[0].public_key,
                       CertTemplate(end - 10, 11))
    with pytest.raises(PolicyViolation):
        aca_issue(aca, req, provider)


def test_sealed_archive_round_trip_and_tamper(provisioned, hierarchy, provider):
    records = decode_archive(provisioned.archive)
    assert encode_archive(records) == provisioned.archive
    with pytest.raises(DecodeError):
        decode_archive(provisioned.archive + b"\x00")
    with pytest.raises(DecodeError):
        decode_archive(provisioned.archive[:-1])
    state = ee_init_butterfly(1, provider)
    with pytest.raises(DecryptionFailure):
        ee_open_sealed(state, records[0], provider)  # not this EE's key
    with pytest.raises(DecryptionFailure):
        ee_open_sealed(state, SealedResponse(7, records[0].ciphertext), provider)


def test_message_codecs(provider, enrolled_ee):
    state = ee_init_butterfly(3, provider)
    req = EeRaCertRequest(state.ck.ck, state.A.encode(), tuple(k.public_key for k in state.kem_pairs),
                          CertTemplate(1, 2, 3), enrolled_ee.certificate, b"sig")
    assert EeRaCertRequest.decode(req.encode()) == req
    ra_req = RaAcaRequest(2, state.A.encode(), state.kem_pairs[0].public_key, CertTemplate(1, 2))
    assert RaAcaRequest.decode(ra_req.encode()) == ra_req
    leak = RaAcaRequest(2, state.A.encode(), state.kem_pairs[0].public_key, CertTemplate(1, 2), state.A.encode())
    assert RaAcaRequest.decode(leak.encode()) == leak


def test_aca_response_is_sealed_from_ra(provisioned):
    """The RA relays sealed blobs only: no certificate or r ciphertext in clear."""
    ra = provisioned.transcripts["RA"]
    for cred in provisioned.credentials:
        assert not ra.contains(cred.certificate.encode())
        assert not ra.contains(cred.certificate.tbs.vki_key)


def test_seeded_runs_are_reproducible():
    def run(seed):
        provider = CryptoProvider(seed)
        cfg = HierarchyConfig(*(SchemeId.DILITHIUM2,) * 5)
        h = build_hierarchy(cfg, provider)
        ee = new_end_entity(h, "EE")
        enroll(ee, h, provider, SchemeId.DILITHIUM2, SchemeId.DILITHIUM2)
        res = run_provisioning(ee, h[EntityRole.RA], h[EntityRole.ACA], 3, provider)
        return res.archive, [c.private_key for c in res.credentials]

    assert run(5) == run(5)
    assert run(5) != run(6)


def test_butterfly_with_ecdsa_aca_gives_pure_ecc(provider):
    h = build_hierarchy(HierarchyConfig(aca_scheme=SchemeId.ECDSA_P256, hybrid_policy=False), provider)
    ee = new_end_entity(h, "EE")
    enroll(ee, h, provider)
    res = run_provisioning(ee, h[EntityRole.RA], h[EntityRole.ACA], 2, provider)
    for cred in res.credentials:
        assert cred.certificate.kind is CertKind.PURE_ECC
        assert len(cred.certificate.encode()) == 132

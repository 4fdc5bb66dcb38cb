import math
import os
from pathlib import Path

import numpy as np
import pytest

import jfd

DATA = Path(os.environ.get("JFD_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="module")
def camera():
    return jfd.read_pgm(str(DATA / "camera.pgm"))


def test_transform_round_trip_is_close(camera):
    plain = jfd.forward_transform(camera, 0.1)
    assert plain.block_count == 64 * 64
    assert jfd.inverse_transform(plain).shape == camera.shape
    assert jfd.psnr(camera, jfd.inverse_transform(plain)) > 40.0
    assert math.isinf(jfd.psnr(camera, camera))


def test_flat_block_has_zero_coefficients():
    plain = jfd.forward_transform(np.full((8, 8), 128, dtype=np.uint8))
    assert not plain.coefficients().any()


def test_pipeline_traces_customer(camera):
    params = jfd.SchemeParams(q=0.5, nt=8)
    key = jfd.MasterKey.from_seed(3)
    plain = jfd.forward_transform(camera, 0.5)
    enc = jfd.encrypt(plain, key, params)
    assert enc.key_id == key.key_id

    db = jfd.CustomerDatabase()
    for c in (5, 9):
        db.add(jfd.assign_codeword(c, 256))
    grant = jfd.build_grant(key, jfd.assign_codeword(5, 256), plain, params)
    copy = jfd.inverse_transform(jfd.joint_decrypt(enc, grant, params))

    result = jfd.extract_fingerprint(copy, plain, key, params, jfd.codeword_length(256))
    assert result.value == 5
    verdict = jfd.trace(result, db, 0.2)
    assert verdict.customer == 5 and verdict.distance == 0.0


def test_compact_grant_needs_directory(camera):
    params = jfd.SchemeParams(nt=8)
    key = jfd.MasterKey.from_seed(4)
    plain = jfd.forward_transform(camera, 0.5)
    enc = jfd.encrypt(plain, key, params)
    directory = jfd.CompactDirectory()
    grant = jfd.build_grant(key, jfd.assign_codeword(2, 16), plain, params, jfd.GrantMode.compact, directory)
    assert len(directory) == 1
    plain_img = jfd.inverse_transform(plain)
    good = jfd.inverse_transform(jfd.joint_decrypt(enc, grant, params, directory))
    bad = jfd.inverse_transform(jfd.joint_decrypt(enc, grant, params))
    assert jfd.psnr(plain_img, good) > 25.0 > jfd.psnr(plain_img, bad)


def test_errors_carry_code(camera):
    plain = jfd.forward_transform(camera, 0.5)
    params = jfd.SchemeParams()
    enc = jfd.encrypt(plain, jfd.MasterKey.from_seed(1), params)
    foreign = jfd.build_grant(jfd.MasterKey.from_seed(2), jfd.assign_codeword(1, 4), plain, params)
    with pytest.raises(jfd.JfdError) as e:
        jfd.joint_decrypt(enc, foreign, params)
    assert e.value.code == "wrong grant"
    with pytest.raises(jfd.JfdError):
        jfd.SchemeParams(nt=0)


def test_capacity_and_brute_force(camera):
    plain = jfd.forward_transform(camera, 0.5)
    cap = jfd.capacity(plain, jfd.SchemeParams(stripes=4))
    assert sum(cap.stripe_bits) == cap.bits == jfd.fingerprint_positions(plain, jfd.SchemeParams())
    assert cap.max_customers == 2**cap.bits
    assert jfd.brute_force_space(2**64, 1000) == 2**64 - 999
    assert jfd.brute_force_space(2**64, 1000, parts=4, multikey=True, authorized=True) == 2**256 - 1000


def test_sweeps(camera):
    q = jfd.sweep_q(camera, [0.5, 1.0, 2.0])
    assert q["q"] == [0.5, 1.0, 2.0]
    assert q["mean_nonzero"] == sorted(q["mean_nonzero"], reverse=True)
    nt = jfd.sweep_nt(camera, jfd.MasterKey.from_seed(0), jfd.SchemeParams(), [1, 8, 64])
    assert nt["coeff_sq_error"][-1] == 0.0
    assert len(jfd.sweep_sensitivity(camera)["psnr_db"]) == 64


def test_pgm_round_trip(tmp_path):
    img = np.arange(35, dtype=np.uint8).reshape(5, 7)
    jfd.write_pgm(img, str(tmp_path / "a.pgm"))
    assert np.array_equal(jfd.read_pgm(str(tmp_path / "a.pgm")), img)
    attacked = jfd.requantize_attack(img, 1.0)
    assert attacked.shape == img.shape

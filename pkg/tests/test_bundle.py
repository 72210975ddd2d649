import hashlib

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from wcforecast.bundle import (
    MAGIC,
    _decode,
    _encode,
    bundle_from_dict,
    bundle_to_dict,
    encode_payload,
    load_bundle,
    read_container,
    save_bundle,
    write_container,
)
from wcforecast.ensemble import predict_match
from wcforecast.errors import BundleError


def test_round_trip_predicts_identically(small_bundle, tmp_path, rng):
    path = save_bundle(small_bundle, tmp_path / "b.wcfb")
    loaded = load_bundle(path)
    width = small_bundle.scaler.means.shape[0]
    X = rng.normal(size=(40, width)) * small_bundle.scaler.stds + small_bundle.scaler.means
    a, b = small_bundle.family_proba(X), loaded.family_proba(X)
    for fam in a:
        assert_array_equal(a[fam], b[fam])
    assert loaded.profiles == small_bundle.profiles
    assert loaded.attributes == small_bundle.attributes
    assert loaded.format_version == "1.1"
    assert predict_match(loaded, "Qatar", "Senegal", 2021) == predict_match(small_bundle, "Qatar", "Senegal", 2021)


def test_serialization_is_byte_stable(small_bundle, tmp_path):
    p1 = save_bundle(small_bundle, tmp_path / "1.wcfb")
    p2 = save_bundle(load_bundle(p1), tmp_path / "2.wcfb")
    assert p1.read_bytes() == p2.read_bytes()


def test_header_layout(small_bundle, tmp_path):
    blob = save_bundle(small_bundle, tmp_path / "b.wcfb").read_bytes()
    head, _, payload = blob.partition(b"\n\n")
    lines = head.decode("ascii").split("\n")
    assert lines[0].encode() == MAGIC
    assert lines[1] == "format_version=1.1"
    assert lines[2] == "encoding=zlib+json"
    assert lines[3] == f"payload_bytes={len(payload)}"
    assert lines[4] == f"payload_sha256={hashlib.sha256(payload).hexdigest()}"


def test_reads_version_1_0(small_bundle, tmp_path):
    data = bundle_to_dict(small_bundle)
    del data["grid_results"], data["test_match_ids"]
    data["format_version"] = "1.0"
    path = tmp_path / "old.wcfb"
    path.write_bytes(write_container(encode_payload(data), "1.0"))
    old = load_bundle(path)
    assert old.format_version == "1.0"
    assert old.grid_results == [] and old.test_match_ids == []
    res = predict_match(old, "Qatar", "Ecuador", 2022)
    assert res == predict_match(small_bundle, "Qatar", "Ecuador", 2022)


def test_rejects_unknown_version(small_bundle):
    blob = write_container(encode_payload(bundle_to_dict(small_bundle)), "2.0")
    with pytest.raises(BundleError, match="format_version"):
        read_container(blob)


@pytest.mark.parametrize("cut", [10, 100, -1, -500])
def test_rejects_truncation(small_bundle, tmp_path, cut):
    blob = save_bundle(small_bundle, tmp_path / "b.wcfb").read_bytes()
    with pytest.raises(BundleError):
        read_container(blob[:cut])


def test_rejects_flipped_bytes(small_bundle, tmp_path, rng):
    blob = save_bundle(small_bundle, tmp_path / "b.wcfb").read_bytes()
    header_len = blob.index(b"\n\n") + 2
    for pos in rng.integers(0, len(blob), 25):
        bad = bytearray(blob)
        bad[pos] ^= 0x40
        with pytest.raises(BundleError):
            read_container(bytes(bad))
    bad = bytearray(blob)
    bad[header_len + 5] ^= 0x01
    with pytest.raises(BundleError, match="checksum"):
        read_container(bytes(bad))


def test_rejects_trailing_data_and_garbage(small_bundle, tmp_path):
    blob = save_bundle(small_bundle, tmp_path / "b.wcfb").read_bytes()
    with pytest.raises(BundleError):
        read_container(blob + b"x")
    with pytest.raises(BundleError):
        read_container(b"hello\n\nworld")
    with pytest.raises(BundleError):
        load_bundle(tmp_path / "missing.wcfb")


def test_malformed_payload_rejected():
    payload = encode_payload({"seed": 1})
    with pytest.raises(BundleError, match="malformed"):
        bundle_from_dict(read_container(write_container(payload))[1], "1.1")


def test_arrays_round_trip_bit_exact():
    arr = np.array([0.1, -0.0, 1e-310, np.pi])
    back = _decode(_encode({"a": arr}))["a"]
    assert back.tobytes() == arr.tobytes()

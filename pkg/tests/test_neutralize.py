import numpy as np
import pytest

from biascope.errors import AlignmentError
from biascope.neutralize import neutralize_pair, neutralize_store
from biascope.store import AlignedPair, open_store, read_vectors, write_store


def make_pair(sid, a, b):
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    tokens = [f"t{i}" for i in range(a.shape[0])]
    return AlignedPair(sid, tuple(tokens), tuple(tokens), a, b)


def test_identical_inputs_reproduce_exactly():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((5, 8)).astype(np.float32)
    out = neutralize_pair(make_pair("s", a, a.copy()))
    assert out.vectors.tobytes() == a.tobytes()


def test_hand_average():
    out = neutralize_pair(make_pair("s", [[1.0, 3.0]], [[3.0, 1.0]]))
    np.testing.assert_array_equal(out.vectors, [[2.0, 2.0]])


def test_symmetry_100_random_pairs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        a = rng.standard_normal((n, 4)).astype(np.float32)
        b = rng.standard_normal((n, 4)).astype(np.float32)
        ab = neutralize_pair(make_pair("s", a, b)).vectors
        ba = neutralize_pair(make_pair("s", b, a)).vectors
        assert ab.tobytes() == ba.tobytes()


def test_gender_direction_cancellation_exact():
    rng = np.random.default_rng(5)
    # dyadic-friendly values keep (v+g)+(v-g) exact in float32
    v = (rng.integers(-64, 64, size=(4, 8)) / 16.0).astype(np.float32)
    g = (rng.integers(-32, 32, size=(4, 8)) / 16.0).astype(np.float32)
    out = neutralize_pair(make_pair("s", v + g, v - g))
    assert out.vectors.tobytes() == v.tobytes()


def test_linearity_power_of_two_exact():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((3, 4)).astype(np.float32)
    b = rng.standard_normal((3, 4)).astype(np.float32)
    base = neutralize_pair(make_pair("s", a, b)).vectors
    scaled = neutralize_pair(make_pair("s", a * np.float32(4.0), b * np.float32(4.0))).vectors
    assert scaled.tobytes() == (base * np.float32(4.0)).tobytes()


def test_linearity_general_scale_close():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((3, 4)).astype(np.float32)
    b = rng.standard_normal((3, 4)).astype(np.float32)
    s = np.float32(1.7)
    base = neutralize_pair(make_pair("s", a, b)).vectors
    scaled = neutralize_pair(make_pair("s", a * s, b * s)).vectors
    np.testing.assert_allclose(scaled, base * s, rtol=1e-6)


def test_tokens_come_from_variant_a():
    pair = AlignedPair(
        "s", ("he", "ran"), ("she", "ran"),
        np.zeros((2, 2), np.float32), np.ones((2, 2), np.float32),
    )
    assert neutralize_pair(pair).tokens == ("he", "ran")


def test_store_neutralization_matches_hand_oracle(tmp_path):
    rng = np.random.default_rng(13)
    mats_a = {f"s{i}": rng.standard_normal((3, 4)).astype(np.float32) for i in range(5)}
    mats_b = {f"s{i}": rng.standard_normal((3, 4)).astype(np.float32) for i in range(5)}
    tokens = ["x", "y", "z"]
    a = write_store([(k, tokens, v) for k, v in mats_a.items()], 4, tmp_path / "a.cemb")
    b = write_store([(k, tokens, v) for k, v in mats_b.items()], 4, tmp_path / "b.cemb")
    out = neutralize_store(a, b, tmp_path / "n.cemb")
    assert out.layer == "avg(unspecified,unspecified)"
    for sid in mats_a:
        expected = (mats_a[sid] + mats_b[sid]) / np.float32(2.0)
        assert read_vectors(out, sid).tobytes() == expected.tobytes()
    assert out.sentence_ids() == a.sentence_ids()


def test_store_neutralization_identical_stores_bit_identical(tmp_path):
    rng = np.random.default_rng(17)
    mats = {f"s{i}": rng.standard_normal((2, 3)).astype(np.float32) for i in range(3)}
    a = write_store([(k, ["a", "b"], v) for k, v in mats.items()], 3, tmp_path / "a.cemb")
    b = write_store([(k, ["a", "b"], v) for k, v in mats.items()], 3, tmp_path / "b.cemb")
    out = neutralize_store(a, b, tmp_path / "n.cemb")
    for sid, mat in mats.items():
        assert read_vectors(out, sid).tobytes() == mat.tobytes()


def test_id_set_mismatch_lists_symmetric_difference(tmp_path):
    a = write_store(
        [("only_a", ["t"], np.zeros((1, 2), np.float32))], 2, tmp_path / "a.cemb"
    )
    b = write_store(
        [("only_b", ["t"], np.zeros((1, 2), np.float32))], 2, tmp_path / "b.cemb"
    )
    with pytest.raises(AlignmentError) as exc:
        neutralize_store(a, b, tmp_path / "n.cemb")
    assert "only_a" in str(exc.value) and "only_b" in str(exc.value)


def test_swap_order_invariance_of_payload(tmp_path):
    rng = np.random.default_rng(19)
    mats_a = {f"s{i}": rng.standard_normal((2, 3)).astype(np.float32) for i in range(4)}
    mats_b = {f"s{i}": rng.standard_normal((2, 3)).astype(np.float32) for i in range(4)}
    tok = ["p", "q"]
    a = write_store([(k, tok, v) for k, v in mats_a.items()], 3, tmp_path / "a.cemb")
    b = write_store([(k, tok, v) for k, v in mats_b.items()], 3, tmp_path / "b.cemb")
    ab = neutralize_store(a, b, tmp_path / "ab.cemb")
    ba = neutralize_store(b, a, tmp_path / "ba.cemb")
    for sid in mats_a:
        assert read_vectors(ab, sid).tobytes() == read_vectors(ba, sid).tobytes()

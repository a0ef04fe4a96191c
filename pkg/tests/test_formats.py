import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filament_waves import formats
from filament_waves.fourier import FourierField, SymmetryClass

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_float_format_round_trips_exactly():
    for x in (0.1, 1 / 3, -2.5e-300, 1e308, 0.0):
        assert float(formats.fmt_float(x)) == x
    assert formats.fmt_cell(True) == "1" and formats.fmt_cell(3) == "3"


@given(values=st.lists(finite, min_size=1, max_size=20))
@settings(deadline=None)
def test_csv_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "x.csv"
    manifest = formats.RunManifest(command="test", arguments={"n": len(values)})
    formats.write_csv(path, ["i", "x"], enumerate(values), manifest)
    first = path.read_text().splitlines()[0]
    assert first == f"# manifest-digest: {manifest.digest}"
    header, rows = formats.read_csv(path)
    assert header == ["i", "x"]
    assert [float(r[1]) for r in rows] == values


def test_manifest_digest_ignores_outputs_and_timing(tmp_path):
    m = formats.RunManifest(command="c", arguments={"x": 1})
    d = m.digest
    formats.write_json(tmp_path / "out.json", {"y": 2}, m)
    m.write(tmp_path)
    assert m.digest == d
    assert formats.RunManifest(command="c", arguments={"x": 2}).digest != d
    doc = formats.read_json(tmp_path / "manifest.json")
    assert doc["outputs"]["out.json"] == formats.sha256_file(tmp_path / "out.json")
    assert formats.read_json(tmp_path / "out.json")["manifest_digest"] == d


def real_field(seed, J, K):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(2, 2 * J + 1, 2 * K + 1)) + 1j * rng.normal(size=(2, 2 * J + 1, 2 * K + 1))
    c = 0.5 * (c + np.conj(c[:, ::-1, ::-1]))
    return FourierField(c, SymmetryClass.standing(1, 0))


@given(st.integers(0, 2**32 - 1), st.integers(0, 5), st.integers(0, 5))
@settings(max_examples=30, deadline=None)
def test_field_snapshot_round_trip(seed, J, K):
    u = real_field(seed, J, K)
    doc = json.loads(formats.canonical_json(formats.field_to_dict(u, {"a": 1.5})))
    back, meta = formats.field_from_dict(doc)
    assert np.array_equal(back.coeffs, u.coeffs)
    assert back.symmetry == u.symmetry and meta == {"a": 1.5}


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), finite)
@settings(max_examples=30, deadline=None)
def test_state_snapshot_round_trip(seed, K, t):
    rng = np.random.default_rng(seed)
    w1 = rng.normal(size=2 * K + 1) + 1j * rng.normal(size=2 * K + 1)
    w2 = rng.normal(size=2 * K + 1) + 1j * rng.normal(size=2 * K + 1)
    doc = json.loads(formats.canonical_json(formats.state_to_dict(w1, w2, t)))
    kind, a, b, meta = formats.one_d_from_dict(doc)
    assert kind == "state" and meta["t"] == t
    assert np.array_equal(a, w1) and np.array_equal(b, w2)


def test_profile_snapshot_fills_negative_modes():
    coeffs = np.zeros((2, 7), complex)
    coeffs[0, 3 + 1] = coeffs[0, 3 - 1] = 0.25
    coeffs[1, 3] = 0.5
    kind, x, y, _ = formats.one_d_from_dict(formats.profile_to_dict(coeffs))
    assert kind == "profile"
    assert np.array_equal(x, coeffs[0]) and np.array_equal(y, coeffs[1])


def test_snapshot_rejects_bad_documents():
    with pytest.raises(ValueError):
        formats.field_from_dict({"format": "other"})
    with pytest.raises(ValueError):
        formats.field_from_dict({"format": formats.FIELD_FORMAT_2D, "Jmax": 1, "Kmax": 1,
                                 "records": [[2, 0, 1, 0, 0, 0]]})
    with pytest.raises(ValueError):
        formats.one_d_from_dict({"format": formats.FIELD_FORMAT_2D})


def test_read_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nb-max = 0.05\nJ=16  # trailing\n\n")
    assert formats.read_config(path) == {"b_max": "0.05", "J": "16"}
    path.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        formats.read_config(path)

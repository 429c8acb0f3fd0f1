import os

import numpy as np
import pytest

from frachybrid import fileio, stability
from frachybrid.sysmodel import PseudoPolynomial, ResetClosedLoop, SwitchingSystem

DATA = os.path.join(os.path.dirname(__file__), "data")


def test_parse_switching_file():
    sys_ = fileio.build_system(fileio.load_document(os.path.join(DATA, "example3.json")))
    assert isinstance(sys_, SwitchingSystem)
    assert sys_.labels == ["A1", "A2"] and sys_.alpha == 0.5


def test_parse_reset_and_poly_files():
    rcl = fileio.build_system(fileio.load_document(os.path.join(DATA, "fci.json")))
    assert isinstance(rcl, ResetClosedLoop) and rcl.n == 5
    poly = fileio.build_system(fileio.load_document(os.path.join(DATA, "poly.json")))
    assert isinstance(poly, PseudoPolynomial) and poly.coeffs == (6.0, 5.0, 1.0)


def test_truncated_json_reports_line_and_column():
    with pytest.raises(fileio.InputError, match=r"<input>:2:\d+"):
        fileio.parse_document('{"kind": "switching",\n "alpha": ')


def test_unknown_field_rejected():
    text = '{"kind": "pseudo_poly", "base_order": 0.5, "coeffs": [1, 1], "extra": 1}'
    with pytest.raises(fileio.InputError, match="extra"):
        fileio.parse_document(text)


def test_nested_unknown_field_rejected():
    text = '{"kind": "switching", "alpha": 0.5, "subsystems": [{"label": "a", "A": [[1]], "B": 2}]}'
    with pytest.raises(fileio.InputError, match="subsystems/0"):
        fileio.parse_document(text)


def test_nan_literal_rejected():
    with pytest.raises(fileio.InputError):
        fileio.parse_document('{"kind": "pseudo_poly", "base_order": NaN, "coeffs": [1, 1]}')


def test_semantic_error_is_input_error():
    doc = fileio.parse_document('{"kind": "pseudo_poly", "base_order": 0.5, "coeffs": [1, 2]}')
    with pytest.raises(fileio.InputError, match="monic"):
        fileio.build_system(doc)


def test_unknown_kind():
    with pytest.raises(fileio.InputError, match="kind"):
        fileio.parse_document('{"kind": "descriptor"}')


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    cols = [rng.standard_normal(20) * 10.0 ** rng.integers(-8, 8, 20) for _ in range(3)]
    path = fileio.write_csv(tmp_path / "a.csv", ["a", "b", "c"], cols)
    header, back = fileio.read_csv(path)
    assert header == ["a", "b", "c"]
    for name, col in zip(header, cols):
        printed = np.array([float(fileio.CSV_FORMAT % v) for v in col])
        np.testing.assert_array_equal(back[name], printed)
        np.testing.assert_allclose(back[name], col, rtol=1e-11)


def test_sweep_csv_layout(tmp_path):
    rep = stability.phase_sweep_thm4(np.diag([-1.0, -2.0]), np.diag([-2.0, -1.0]), 0.5,
                                     stability.FrequencyGrid(1e-2, 1e2, 32))
    path = fileio.sweep_csv(tmp_path / "s.csv", rep)
    header, back = fileio.read_csv(path)
    assert header == ["omega", "arg1_rad", "arg2_rad", "delta_rad", "threshold_rad"]
    assert np.all(np.diff(back["omega"]) > 0)
    np.testing.assert_array_equal(back["threshold_rad"], float("%.12g" % (np.pi / 2)))


def test_atomic_write_leaves_no_temporaries(tmp_path):
    fileio.atomic_write(tmp_path / "x.txt", "one")
    fileio.atomic_write(tmp_path / "x.txt", "two")
    assert sorted(os.listdir(tmp_path)) == ["x.txt"]
    assert (tmp_path / "x.txt").read_text() == "two"


def test_json_text_is_deterministic_and_finite():
    obj = {"b": np.float64(0.1), "a": np.array([1, 2]), "c": float("nan"), "d": np.bool_(True)}
    text = fileio.json_text(obj)
    assert text == fileio.json_text(dict(reversed(list(obj.items()))))
    assert '"c": null' in text and "0.1" in text and "true" in text

import numpy as np
import pytest

from mlofdm.harness.campaign import MetricRecord, write_records, read_records
from mlofdm.harness.plots import ber_figure, curves, emit_plots
from mlofdm.harness.theory import theoretical_ber_db


def make_records():
    out = []
    for scen in ("a", "b"):
        for det in ("ls", "mmse", "dnn"):
            for snr in (15.0, 5.0, 10.0):
                ber = 0.1 / snr
                out.append(MetricRecord(scen, det, snr, ber, 0.001, float("nan"), 1.0,
                                        float("nan"), 10, 1, 10, "r"))
    return out


def test_curves_grouped_and_sorted():
    c = curves(make_records())
    assert sorted(c) == ["a", "b"]
    assert sorted(c["a"]) == ["dnn", "ls", "mmse"]
    np.testing.assert_array_equal(c["a"]["ls"][0], [5.0, 10.0, 15.0])


def test_one_curve_per_detector_plus_theory():
    fig = ber_figure("a", curves(make_records())["a"])
    gids = sorted(line.get_gid() for line in fig.axes[0].get_lines())
    assert gids == ["curve-dnn", "curve-ls", "curve-mmse", "curve-theory"]


def test_theory_overlay_values():
    fig = ber_figure("a", curves(make_records())["a"])
    (theory,) = [l for l in fig.axes[0].get_lines() if l.get_gid() == "curve-theory"]
    np.testing.assert_allclose(theory.get_ydata(), theoretical_ber_db(theory.get_xdata()), rtol=1e-12)


def test_files_per_scenario(tmp_path):
    paths = emit_plots(make_records(), tmp_path)
    assert [p.name for p in paths] == ["ber_a.svg", "ber_b.svg"]
    text = paths[0].read_text()
    for det in ("ls", "mmse", "dnn", "theory"):
        assert f'id="curve-{det}"' in text


def test_byte_identical_regeneration(tmp_path):
    csv = tmp_path / "m.csv"
    write_records(csv, make_records())
    a = emit_plots(read_records(csv), tmp_path / "one")
    b = emit_plots(read_records(csv), tmp_path / "two")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_empty_input(tmp_path):
    with pytest.raises(ValueError):
        emit_plots([], tmp_path)

import dataclasses

import pytest

from mlofdm.harness.config import ExperimentConfig
from mlofdm.harness.flops import count_flops, doubled, scaling_ratio


@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig()


def test_ls_linear_in_subcarriers(cfg):
    assert 1.8 <= scaling_ratio("ls", cfg, "n_c") <= 2.2


def test_mmse_cubic_in_subcarriers(cfg):
    half = dataclasses.replace(cfg, n_subcarriers=32, n_pilots=32, users=2)
    assert 6.4 <= scaling_ratio("mmse", half, "n_c") <= 9.6


def test_mmse_costs_more_than_ls(cfg):
    assert count_flops("mmse", cfg).total > 10 * count_flops("ls", cfg).total


def test_dnn_count_is_layer_arithmetic(cfg):
    c = count_flops("dnn", cfg)
    sizes = (256, 500, 250, 120, 64)
    macs = sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
    # two groups, one multiply-add per weight
    assert c.counts["rmul"] >= 2 * macs


def test_elm_count_grows_with_hidden(cfg):
    assert scaling_ratio("elm", cfg, "hidden") > 2.0


def test_counts_do_not_depend_on_seed(cfg):
    a = count_flops("mmse", cfg).total
    assert count_flops("mmse", dataclasses.replace(cfg, seed=3)).total == a


def test_doubled_axes(cfg):
    assert doubled(cfg, "n_c").n_subcarriers == 128
    assert doubled(cfg, "n_c").n_pilots == 128
    assert doubled(cfg, "hidden").elm.hidden == 100
    with pytest.raises(ValueError):
        doubled(cfg, "users")


def test_unknown_detector(cfg):
    with pytest.raises(ValueError):
        count_flops("zf", cfg)

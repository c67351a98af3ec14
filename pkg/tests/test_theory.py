import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlofdm.harness.theory import qam_coefficients, theoretical_ber, theoretical_ber_db
from mlofdm.modem import SUPPORTED_ORDERS


def test_zero_snr_limit():
    assert theoretical_ber(1e-12) == pytest.approx(0.5, abs=1e-6)


def test_ten_db_value():
    assert theoretical_ber_db(10.0) == pytest.approx(0.5 * (1 - np.sqrt(5 / 6)), rel=1e-12)
    assert theoretical_ber_db(10.0) == pytest.approx(0.0434, abs=5e-4)


def test_high_snr_asymptote():
    gb = 10 ** 4 / 2
    assert theoretical_ber_db(40.0) == pytest.approx(0.25 / gb, rel=0.05)


def test_qpsk_coefficients():
    assert qam_coefficients(4) == pytest.approx((1.0, 1.0))


def test_sixteen_qam_coefficients():
    assert qam_coefficients(16) == pytest.approx((0.75, 0.2))


def test_errors():
    with pytest.raises(ValueError):
        theoretical_ber(0.0)
    with pytest.raises(ValueError):
        theoretical_ber(1.0, 8)


def test_array_input():
    v = theoretical_ber_db([5, 10, 15])
    assert v.shape == (3,)


@given(st.floats(-20, 60), st.floats(0.1, 10), st.sampled_from(SUPPORTED_ORDERS))
def test_monotone_decreasing(db, step, order):
    assert theoretical_ber_db(db + step, order) < theoretical_ber_db(db, order)

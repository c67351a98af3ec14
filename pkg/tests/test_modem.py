import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from mlofdm.modem import (SUPPORTED_ORDERS, PilotPattern, build_frame, cp_length, demap_symbols,
                          dump_tables, make_pilot_pattern, map_bits, nearest_indices, qam,
                          strip_cp_and_dft, to_time_domain)
from mlofdm.numerics import RngStream, dft


def grid_neighbours(c):
    """Pairs of points at the minimum distance."""
    d = np.abs(c.points[:, None] - c.points[None, :])
    dmin = c.min_distance
    return [(i, j) for i, j in itertools.combinations(range(c.order), 2)
            if abs(d[i, j] - dmin) < 1e-9]


class TestConstellation:
    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_unit_energy_and_distinct(self, order):
        c = qam(order)
        assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)
        assert len(np.unique(np.round(c.points, 12))) == order
        assert len({tuple(r) for r in c.labels()}) == order

    def test_qpsk_exhaustive(self):
        c = qam(4)
        pts = map_bits(np.array([0, 0, 0, 1, 1, 1, 1, 0]), c)
        assert len(set(np.round(pts, 12))) == 4
        np.testing.assert_allclose(np.abs(pts), 1.0)

    @pytest.mark.parametrize("order", [4, 16])
    def test_gray_property(self, order):
        c = qam(order)
        labels = c.labels()
        for i, j in grid_neighbours(c):
            assert np.sum(labels[i] != labels[j]) == 1

    def test_cross32_layout(self):
        pts = qam(32).points
        scale = np.sqrt(np.mean(np.abs(pts) ** 2) / 20.0)
        raw = pts / scale
        # cross: odd integer coordinates, no corner points (|I| = |Q| = 5)
        assert np.allclose(raw.real, np.round(raw.real)) and np.allclose(raw.imag, np.round(raw.imag))
        assert not np.any((np.abs(raw.real) > 4) & (np.abs(raw.imag) > 4))
        assert np.max(np.abs(raw.real)) == pytest.approx(5)

    def test_unsupported_order(self):
        with pytest.raises(ValueError):
            qam(8)


class TestMapping:
    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_round_trip(self, order):
        c = qam(order)
        bits = RngStream(order).bits(1020 if order == 32 else 1024)
        np.testing.assert_array_equal(demap_symbols(map_bits(bits, c), c), bits)

    def test_bad_length(self):
        with pytest.raises(ValueError):
            map_bits(np.zeros(3, dtype=int), qam(4))

    def test_tie_goes_to_lower_index(self):
        c = qam(4)
        for i, j in grid_neighbours(c):
            mid = 0.5 * (c.points[i] + c.points[j])
            assert nearest_indices(np.array([mid]), c)[0] == min(i, j)

    def test_origin_tie_resolves_to_index_zero(self):
        assert nearest_indices(np.array([0j]), qam(16))[0] == np.argmin(np.abs(qam(16).points))

    @given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                    min_size=1, max_size=50))
    @settings(max_examples=50, deadline=None)
    def test_nearest_matches_loop(self, ys):
        c = qam(16)
        got = nearest_indices(np.array(ys), c)
        for y, g in zip(ys, got):
            d = [abs(y - p) ** 2 for p in c.points]
            assert g == min(range(16), key=lambda k: (d[k], k))

    def test_awgn_qpsk_against_closed_form(self):
        c = qam(4)
        n = 1_000_000
        r = RngStream(99)
        bits = r.bits(2 * n)
        gb = 10 ** 0.5
        # Es = 1, Eb = 1/2, N0 = Eb / gb
        y = map_bits(bits, c) + r.complex_normal(n, 0.5 / gb)
        ber = np.mean(demap_symbols(y, c) != bits)
        theory = 0.5 * erfc(np.sqrt(gb))
        sigma = np.sqrt(theory * (1 - theory) / bits.size)
        assert abs(ber - theory) < 3 * sigma


class TestPilots:
    def test_block_default(self):
        p = make_pilot_pattern(64)
        assert p.arrangement == "block" and p.n_pilots == 64
        assert p.data_indices.size == 0

    @pytest.mark.parametrize("n_p", [32, 16, 8])
    def test_comb_partition(self, n_p):
        p = make_pilot_pattern(64, n_p)
        assert p.arrangement == "comb"
        assert p.pilot_indices[0] == 0 and p.pilot_indices[-1] == 63
        gaps = np.diff(p.pilot_indices)
        assert gaps.max() - gaps.min() <= 1
        assert set(p.pilot_indices).isdisjoint(p.data_indices)
        assert p.n_pilots + p.data_indices.size == 64
        sym = p.symbol()
        assert np.all(sym[p.data_indices] == 0)
        np.testing.assert_allclose(np.abs(sym[p.pilot_indices]), 1.0)

    def test_pilots_are_fixed(self):
        np.testing.assert_array_equal(make_pilot_pattern(64).values, make_pilot_pattern(64).values)

    def test_validation(self):
        with pytest.raises(ValueError):
            PilotPattern(8, np.array([0, 8]), np.ones(2), "comb")
        with pytest.raises(ValueError):
            PilotPattern(8, np.array([0, 1]), np.ones(2), "block")
        with pytest.raises(ValueError):
            make_pilot_pattern(64, 65)


class TestFrame:
    def test_cp_length(self):
        assert cp_length(64, 0.25) == 16
        f = build_frame(RngStream(0).bits(128), make_pilot_pattern(64), qam(4), 0.25)
        assert to_time_domain(f).shape == (2 * 80,)

    @pytest.mark.parametrize("tg", [0.0, 0.25])
    @pytest.mark.parametrize("order", SUPPORTED_ORDERS)
    def test_loopback(self, tg, order):
        c = qam(order)
        bits = RngStream(1).bits((3, 64 * c.bits_per_symbol))
        f = build_frame(bits, make_pilot_pattern(64, 16), c, tg)
        np.testing.assert_allclose(strip_cp_and_dft(to_time_domain(f), f), f.grid, atol=1e-12)

    def test_pilot_positions_carry_no_payload(self):
        p = make_pilot_pattern(64, 8)
        f1 = build_frame(np.zeros(128, dtype=int), p, qam(4))
        f2 = build_frame(np.ones(128, dtype=int), p, qam(4))
        np.testing.assert_array_equal(f1.grid[0], f2.grid[0])

    def test_unit_energy_per_data_subcarrier(self):
        bits = RngStream(2).bits((4000, 128))
        f = build_frame(bits, make_pilot_pattern(64), qam(4))
        assert np.mean(np.abs(f.data) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_bit_count_mismatch(self):
        with pytest.raises(ValueError):
            build_frame(np.zeros(100, dtype=int), make_pilot_pattern(64), qam(4))

    def test_cp_longer_than_symbol(self):
        with pytest.raises(ValueError):
            build_frame(np.zeros(128, dtype=int), make_pilot_pattern(64), qam(4), 1.5)

    def test_cp_makes_channel_circular(self, np_rng):
        c = qam(4)
        f = build_frame(RngStream(3).bits(128), make_pilot_pattern(64), c, 0.25)
        h = np_rng.standard_normal(8) + 1j * np_rng.standard_normal(8)
        y = np.convolve(to_time_domain(f), h)
        Y = strip_cp_and_dft(y, f)
        pad = np.zeros(64, dtype=complex)
        pad[:8] = h
        H = np.sqrt(64) * dft(pad)
        np.testing.assert_allclose(Y, H * f.grid, atol=1e-10)


def test_dump_tables(tmp_path):
    paths = dump_tables(tmp_path)
    names = {p.name for p in paths}
    assert any("32" in n for n in names)
    assert all(p.stat().st_size > 0 for p in paths)

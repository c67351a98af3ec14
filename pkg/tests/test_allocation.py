import itertools

import numpy as np
import pytest

from mlofdm.allocation import (build_interference_map, select_subcarriers, sinr, user_sinrs,
                               write_selection_csv)
from mlofdm.numerics import RngStream


def rank_top(values, ks, n):
    """k is kept iff fewer than n subcarriers beat it (higher SINR, or equal and lower index)."""
    keep = set()
    for i in range(len(ks)):
        beaten_by = sum(values[j] > values[i] or (values[j] == values[i] and ks[j] < ks[i])
                        for j in range(len(ks)))
        if beaten_by < n:
            keep.add(int(ks[i]))
    return keep


def exhaustive_best_sum(values, ks, n):
    """Brute force over every size-n subset: the one with the largest total SINR."""
    combos = np.array(list(itertools.combinations(range(len(ks)), n)))
    best = combos[np.argmax(np.asarray(values)[combos].sum(axis=1))]
    return {int(ks[i]) for i in best}


class TestMap:
    def test_four_users_disjoint(self):
        st = build_interference_map(4)
        assert all(not j for j in st.interferers.values())
        assert np.all(st.occupancy() == 1)

    def test_eight_users_full_overlay(self):
        st = build_interference_map(8)
        assert np.all(st.occupancy() == 2)
        assert st.interferers[1] == {5} and st.interferers[5] == {1}
        assert st.primary_users == [1, 2, 3, 4]

    def test_five_users(self):
        occ = build_interference_map(5).occupancy()
        assert np.sum(occ == 2) == 16 and np.sum(occ == 1) == 48

    def test_contiguous_blocks(self):
        st = build_interference_map(4)
        for u in range(1, 5):
            np.testing.assert_array_equal(st.allocations[u], np.arange(16 * (u - 1), 16 * u))

    def test_too_many_users(self):
        with pytest.raises(ValueError):
            build_interference_map(9)
        with pytest.raises(ValueError):
            build_interference_map(4, n_cpu_eq=17)


class TestSinr:
    def test_no_interferer(self):
        H = np.array([[2.0 + 0j]])
        assert sinr(1, 0, H, [3.0], 0.5) == pytest.approx(3 * 4 / 0.5)

    def test_symmetric_limit(self):
        H = np.array([[1 + 1j], [1 - 1j]])
        assert sinr(1, 0, H, [1.0, 1.0], 1e-12, {2}) == pytest.approx(1.0, rel=1e-9)

    def test_hand_case(self):
        H = np.array([[2.0], [1.0]])
        assert sinr(1, 0, H, [1.0, 1.0], 1.0, {2}) == pytest.approx(2.0)

    def test_bad_noise(self):
        with pytest.raises(ValueError):
            sinr(1, 0, np.ones((1, 1)), [1.0], 0.0)

    def test_vectorised_matches_scalar(self):
        st = build_interference_map(6)
        H = RngStream(0).complex_normal((6, 64))
        P = RngStream(1).uniform(0.5, 2, 6)
        v = user_sinrs(st, 2, H, P, 0.1)
        for i, k in enumerate(st.allocations[2]):
            assert v[i] == pytest.approx(sinr(2, k, H, P, 0.1, st.interferers[2]))


class TestSelection:
    def test_interference_free_is_best_gain(self):
        st = build_interference_map(4)
        H = RngStream(2).complex_normal((4, 64))
        sel = select_subcarriers(st, H, 0.1)
        for u in range(1, 5):
            ks = st.allocations[u]
            best = ks[np.argsort(-np.abs(H[u - 1, ks]) ** 2, kind="stable")[:4]]
            assert set(sel.selected[u]) == set(best)

    @pytest.mark.parametrize("users", [4, 6, 8])
    def test_brute_force_oracle(self, users):
        st = build_interference_map(users)
        for t in range(50):
            r = RngStream(3, (users, t))
            H = r.complex_normal((users, 64))
            sel = select_subcarriers(st, H, float(r.uniform(0.01, 1.0)))
            for u, chosen in sel.selected.items():
                assert len(chosen) == 4
                assert set(chosen) <= set(st.allocations[u])
                v, ks = sel.sinr_values[u], st.allocations[u]
                assert set(chosen.tolist()) == rank_top(v, ks, 4)
                assert set(chosen.tolist()) == exhaustive_best_sum(v, ks, 4)

    def test_ties_prefer_lower_index(self):
        st = build_interference_map(4)
        H = np.ones((4, 64), dtype=complex)
        sel = select_subcarriers(st, H, 1.0)
        np.testing.assert_array_equal(sel.selected[2], [16, 17, 18, 19])
        assert rank_top(sel.sinr_values[2], st.allocations[2], 4) == {16, 17, 18, 19}

    def test_scale_invariance(self):
        st = build_interference_map(8)
        H = RngStream(4).complex_normal((8, 64))
        a = select_subcarriers(st, H, 0.3)
        b = select_subcarriers(st, H * 10.0, 0.3 * 100.0)
        for u in a.selected:
            np.testing.assert_array_equal(a.selected[u], b.selected[u])

    def test_selection_csv(self, tmp_path):
        st = select_subcarriers(build_interference_map(4), RngStream(5).complex_normal((4, 64)), 0.1)
        path = tmp_path / "sel.csv"
        write_selection_csv(path, st, 0)
        write_selection_csv(path, st, 1)
        rows = path.read_text().splitlines()
        assert len(rows) == 1 + 2 * 64
        assert sum(r.endswith(",1") for r in rows) == 2 * 16

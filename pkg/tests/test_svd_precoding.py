import math

import numpy as np
import pytest
from scipy.stats import ortho_group

from ampcap.distributions import PrecodedUniform
from ampcap.errors import DimensionError
from ampcap.geometry import Box
from ampcap.lower_bounds import epi_svd, jensen_bound_diag, jensen_bound_general
from ampcap.specialfn import phi
from ampcap.svd_precoding import (
    epi_svd_inner,
    inner_scale,
    jensen_svd,
    jensen_svd_inner,
    precode,
    prelog_sweep,
)

FIG3_ROW = [[0.6557, 0.0357, 0.8491]]


class TestPrecode:
    def test_sorted_diagonal(self):
        pc = precode(np.diag([3.0, 2.0, 0.5]))
        assert np.allclose(pc.sigmas, [3.0, 2.0, 0.5])
        assert np.allclose(pc.U, np.eye(3)) and np.allclose(pc.V, np.eye(3))

    def test_row(self):
        pc = precode(FIG3_ROW)
        assert pc.sigmas.shape == (1,)
        assert pc.sigmas[0] == pytest.approx(math.hypot(*FIG3_ROW[0]), rel=1e-14)
        # 1.0734001...; a listed 1.07341 is off in the fifth decimal
        assert abs(pc.sigmas[0] - 1.07341) <= 1e-4
        assert pc.V.shape == (3, 3) and pc.U.shape == (1, 1)

    def test_reconstruction(self):
        h = np.random.default_rng(0).standard_normal((4, 2))
        pc = precode(h)
        assert np.linalg.norm(pc.reconstruct() - h) <= 1e-9 * np.linalg.norm(h)

    def test_tiny_singular_value_zeroed(self):
        pc = precode([[1.0, 0.0], [0.0, 1e-14]])
        assert pc.sigmas[1] == 0.0 and pc.rank == 1

    def test_halfwidth_size(self):
        with pytest.raises(DimensionError):
            jensen_svd(FIG3_ROW, [1.0, 1.0])


class TestJensenSvd:
    def test_diagonal_matches_direct(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            g = np.sort(rng.uniform(0.05, 3, 3))[::-1]
            a = rng.uniform(0.1, 200, 3)
            lhs = jensen_svd(np.diag(g), a).value_bits
            rhs = jensen_bound_diag(g, Box(a)).value_bits
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_row_uses_leading_halfwidth(self):
        A = 21.084825171429113
        s1 = math.hypot(*FIG3_ROW[0])
        r = jensen_svd(FIG3_ROW, [A, A, A])
        expected = math.log2(math.sqrt(2 / math.e) / phi(s1 * A))
        assert r.value_bits == pytest.approx(expected, rel=1e-12)

    def test_zero_channel(self):
        assert jensen_svd(np.zeros((2, 2)), [5.0, 5.0]).value_bits == 0.0

    def test_rotation_invariance(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal((3, 3))
        a = [3.0, 2.0, 1.0]
        base_j = jensen_svd(h, a).value_bits
        base_e = epi_svd(h, a).value_bits
        for k in range(5):
            Q = ortho_group.rvs(3, random_state=10 + k)
            assert jensen_svd(Q @ h, a).value_bits == pytest.approx(base_j, abs=1e-9)
            assert epi_svd(Q @ h, a).value_bits == pytest.approx(base_e, abs=1e-9)

    def test_monte_carlo_with_precoder(self):
        h = np.random.default_rng(3).standard_normal((2, 2))
        a = np.array([2.0, 1.5])
        pc = precode(h)
        D = PrecodedUniform(pc.V, a)
        mc = jensen_bound_general(h, D, samples=200_000, seed=4)
        psi = float(np.prod(phi(pc.sigmas * a)))
        assert abs(mc.diagnostics["expectation"] - psi) <= 3 * mc.diagnostics["expectation_se"]


class TestInner:
    def test_diagonal_scale_one(self):
        assert inner_scale(np.diag([2.0, 1.0]), [3.0, 4.0]) == pytest.approx(1.0)
        r = jensen_svd_inner(np.diag([2.0, 1.0]), [3.0, 4.0])
        assert r.value_bits == pytest.approx(jensen_svd(np.diag([2.0, 1.0]), [3.0, 4.0]).value_bits)

    def test_inner_is_feasible(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            h = rng.standard_normal((2, 3))
            a = rng.uniform(0.5, 3.0, 3)
            t = inner_scale(h, a)
            pc = precode(h)
            b = np.zeros(3)
            b[:2] = t * a[:2]
            corners = np.array(np.meshgrid(*[[-1, 1]] * 3)).reshape(3, -1).T * b
            x = corners @ pc.V.T
            assert np.all(np.abs(x) <= a * (1 + 1e-12))

    def test_inner_not_above_precoder_domain(self):
        h = np.random.default_rng(6).standard_normal((3, 3))
        a = [5.0, 5.0, 5.0]
        assert jensen_svd_inner(h, a).value_bits <= jensen_svd(h, a).value_bits + 1e-12
        assert epi_svd_inner(h, a).value_bits <= epi_svd(h, a).value_bits + 1e-12

    def test_row_scale_above_one(self):
        A = 10.0
        assert inner_scale(FIG3_ROW, [A, A, A]) == pytest.approx(1.264, abs=1e-3)


class TestPrelog:
    def test_scalar(self):
        row = prelog_sweep([[1.0]], [1e6])[0]
        assert abs(row.lower_ratio - 1) <= 0.05 and abs(row.upper_ratio - 1) <= 0.05

    def test_four_by_two(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal((4, 2))
        h /= math.sqrt(np.prod(np.linalg.svd(h, compute_uv=False)))
        rows = prelog_sweep(h, [1e2, 1e3, 1e4, 1e6])
        last = rows[-1]
        assert abs(last.lower_ratio - 2) <= 0.05 * 2
        assert abs(last.upper_ratio - 2) <= 0.05 * 2
        dev = [max(abs(r.lower_ratio - 2), abs(r.upper_ratio - 2)) for r in rows]
        assert np.all(np.diff(dev) <= 1e-12)

    def test_rank_deficient_flagged(self):
        rows = prelog_sweep([[1.0, 1.0], [1.0, 1.0]], [1e6])
        assert rows[0].rank_deficient and rows[0].rank == 1
        assert abs(rows[0].lower_ratio - 1) <= 0.1 and abs(rows[0].upper_ratio - 1) <= 0.1

    def test_lower_below_upper(self):
        h = np.random.default_rng(7).standard_normal((3, 2))
        for r in prelog_sweep(h, np.geomspace(1, 1e5, 8)):
            assert r.lower_ratio <= r.upper_ratio + 1e-12

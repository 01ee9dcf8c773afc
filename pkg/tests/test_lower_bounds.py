import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ampcap.audit import lower_bound_set
from ampcap.distributions import (
    DitherSpec,
    FiniteDiscrete,
    PamConstellation,
    PamProduct,
    PointMass,
    UniformBox,
)
from ampcap.errors import DomainError, PreconditionError, RankDeficiencyError
from ampcap.geometry import Ball, Box
from ampcap.lower_bounds import (
    amplitude_allocate,
    epi_svd,
    epi_uniform_invertible,
    jensen_bound_diag,
    jensen_bound_general,
    ow_bound,
    ow_pam_diag,
    pam_points_for,
)
from ampcap.oracle import mutual_information_discrete
from ampcap.specialfn import phi
from ampcap.upper_bounds import duality_box_bound, upper_bound_set

TWO_PI_E = 2 * math.pi * math.e
FIG2_H = [[0.3, 0.0], [0.0, 0.1]]
FIG2_X = Box([500.0, 500.0])


def ow_scalar_closed_form(N, A, h):
    delta = A / (N - 1)
    return (math.log2(N) - 0.5 * math.log2(math.pi * math.e / 6)
            - 0.5 * math.log2(1 + 3 / (h * h * delta * delta)))


class TestDistributions:
    def test_pam(self):
        c = PamConstellation(5, 2.0)
        assert np.allclose(c.symbols(), [-2, -1, 0, 1, 2])
        assert c.half_spacing == 0.5
        assert c.entropy_bits == pytest.approx(math.log2(5))
        single = PamConstellation(1, 3.0)
        assert single.half_spacing == 0.0 and np.array_equal(single.symbols(), [0.0])

    def test_pam_validation(self):
        with pytest.raises(DomainError):
            PamConstellation(0, 1.0)
        with pytest.raises(DomainError):
            PamConstellation(3, -1.0)

    def test_product_support(self):
        D = PamProduct([PamConstellation(2, 1.0), PamConstellation(3, 2.0)])
        assert D.size == 6 and D.support().shape == (6, 2)
        assert D.entropy_bits() == pytest.approx(math.log2(6))
        x = D.sample(1000, np.random.default_rng(0))
        assert np.all(np.abs(x) <= [1.0, 2.0])

    def test_point_mass(self):
        assert PointMass([0, 0]).symmetric
        assert not PointMass([1, 0]).symmetric


class TestEpi:
    def test_fig2_paper_volume(self):
        r = epi_uniform_invertible(FIG2_H, FIG2_X, "paper")
        assert r.value_bits == pytest.approx(math.log2(1 + 0.03 * 500**2 / TWO_PI_E), rel=1e-12)
        assert abs(r.value_bits - 8.78177) <= 1e-3
        assert not r.certified

    def test_fig2_exact(self):
        r = epi_uniform_invertible(FIG2_H, FIG2_X)
        assert r.value_bits == pytest.approx(math.log2(1 + 0.03 * 1e6 / TWO_PI_E), rel=1e-12)
        assert abs(r.value_bits - 10.7793) <= 1e-3

    def test_degenerate_volume(self):
        assert epi_uniform_invertible(FIG2_H, Box([0.0, 3.0])).value_bits == 0.0

    def test_singular(self):
        with pytest.raises(RankDeficiencyError):
            epi_uniform_invertible([[1, 1], [1, 1]], Box([1, 1]))

    def test_huge_volume_no_overflow(self):
        r = epi_uniform_invertible(np.eye(50), Box(np.full(50, 1e150)))
        assert math.isfinite(r.value_bits)

    def test_svd_row_channel(self):
        A = 21.084825171429113
        s1 = math.hypot(0.6557, 0.0357, 0.8491)
        r = epi_svd([[0.6557, 0.0357, 0.8491]], [A] * 3)
        assert r.value_bits == pytest.approx(0.5 * math.log2(1 + (2 * A * s1) ** 2 / TWO_PI_E))
        assert abs(r.value_bits - 3.459) <= 1e-3

    def test_svd_rank_deficient(self):
        r = epi_svd([[1, 1], [1, 1]], [3, 3])
        assert r.value_bits == 0.0 and r.diagnostics["rank_deficient"]

    def test_svd_equals_invertible_for_diagonal(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g = rng.uniform(0.05, 3, 3) * rng.choice([-1, 1], 3)
            a = rng.uniform(0.1, 100, 3)
            lhs = epi_svd(np.diag(g), a).value_bits
            rhs = epi_uniform_invertible(np.diag(g), Box(a)).value_bits
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestJensenDiag:
    def test_fig2(self):
        r = jensen_bound_diag([0.3, 0.1], FIG2_X)
        expected = math.log2((2 / math.e) / (phi(150.0) * phi(50.0)))
        assert r.value_bits == pytest.approx(expected, rel=1e-12)
        assert abs(r.value_bits - 10.8003) <= 5e-3

    def test_zero_amplitude(self):
        assert jensen_bound_diag([0.3, 0.1], Box([0.0, 0.0])).value_bits == 0.0

    def test_asymptote(self):
        A = 1e6
        r = jensen_bound_diag([1.0], Box([A]))
        assert abs(r.value_bits - math.log2(math.sqrt(2 / math.e) * A / math.sqrt(math.pi))) < 1e-3

    def test_nondecreasing_in_each_amplitude(self):
        grid = np.geomspace(0.01, 1e3, 12)
        for a2 in (0.1, 10.0, 500.0):
            vals = [jensen_bound_diag([0.3, 0.1], Box([a, a2])).value_bits for a in grid]
            assert np.all(np.diff(vals) >= -1e-12)
            vals = [jensen_bound_diag([0.3, 0.1], Box([a2, a])).value_bits for a in grid]
            assert np.all(np.diff(vals) >= -1e-12)


class TestAllocation:
    def test_box(self):
        assert np.array_equal(amplitude_allocate([1.0, 0.5], Box([3.0, 4.0])), [3.0, 4.0])

    def test_equal_gains_symmetric(self):
        b = amplitude_allocate([1.0, 1.0, 1.0], Ball(6.0, 3))
        assert np.allclose(b, 6.0 / math.sqrt(3), rtol=1e-6)

    def test_concentrates_on_strong_gain(self):
        sig = np.array([1.0, 0.01])
        b = amplitude_allocate(sig, Ball(10.0, 2))
        assert b[0] ** 2 >= 0.99 * 100 and b[0] >= 0.99 * 10
        # random-search oracle on the sphere (boundary contains the optimum)
        rng = np.random.default_rng(0)
        d = np.abs(rng.standard_normal((10**6, 2)))
        pts = 10.0 * d / np.linalg.norm(d, axis=1, keepdims=True)
        oracle = np.min(np.log(phi(pts[:, 0] * sig[0])) + np.log(phi(pts[:, 1] * sig[1])))
        got = float(np.sum(np.log(phi(sig * b))))
        assert got <= oracle + 1e-3

    def test_needs_gain(self):
        with pytest.raises(DomainError):
            amplitude_allocate([0.0, 0.0], Ball(1.0, 2))

    def test_ball_jensen_inside(self):
        r = jensen_bound_diag([0.3, 0.1], Ball(500.0, 2))
        assert np.linalg.norm(r.params["b"]) <= 500.0 * (1 + 1e-12)


class TestJensenGeneral:
    def test_point_mass(self):
        r = jensen_bound_general(FIG2_H, PointMass([1.0, 2.0]), samples=2000)
        assert r.value_bits == 0.0

    def test_zero_channel(self):
        r = jensen_bound_general(np.zeros((2, 2)), UniformBox([3, 3]), samples=2000)
        assert r.value_bits == 0.0

    def test_budget(self):
        with pytest.raises(DomainError):
            jensen_bound_general(FIG2_H, UniformBox([1, 1]), samples=999)

    @pytest.mark.parametrize("a", [(1.0, 2.0), (10.0, 30.0), (50.0, 50.0)])
    def test_matches_closed_form(self, a):
        r = jensen_bound_general(FIG2_H, UniformBox(a), samples=200_000, seed=3)
        psi = phi(0.3 * a[0]) * phi(0.1 * a[1])
        m, se = r.diagnostics["expectation"], r.diagnostics["expectation_se"]
        assert abs(m - psi) <= 3 * se
        assert r.diagnostics["samples"] == 200_000 and r.diagnostics["seed"] == 3

    def test_deterministic(self):
        a = jensen_bound_general(FIG2_H, UniformBox([5, 5]), samples=5000, seed=9)
        b = jensen_bound_general(FIG2_H, UniformBox([5, 5]), samples=5000, seed=9)
        assert a.value_bits == b.value_bits


class TestOzarowWyner:
    def test_scalar_closed_form(self):
        c = PamConstellation(73, 500.0)
        r = ow_bound(PamProduct([c]), [[0.3]], DitherSpec([c.half_spacing]))
        assert r.value_bits == pytest.approx(ow_scalar_closed_form(73, 500.0, 0.3), rel=1e-12)
        assert abs(r.value_bits - 5.5565) <= 1e-3
        assert r.diagnostics["g1"] == "closed_form"

    def test_single_point(self):
        D = PamProduct([PamConstellation(1, 1.0)])
        r = ow_bound(D, [[1.0]], DitherSpec([0.5]))
        assert r.value_bits == 0.0

    def test_vanishing_dither(self):
        c = PamConstellation(9, 10.0)
        vals = [ow_bound(PamProduct([c]), [[1.0]], DitherSpec([d])).value_bits
                for d in (c.half_spacing, 1e-2, 1e-6, 0.0)]
        assert vals[-1] == 0.0 and vals[-2] == 0.0
        assert vals[0] > vals[1]

    def test_overlap(self):
        c = PamConstellation(5, 2.0)
        with pytest.raises(PreconditionError):
            ow_bound(PamProduct([c]), [[1.0]], DitherSpec([0.6]))
        D = FiniteDiscrete([[0.0, 0.0], [0.5, 0.1]])
        with pytest.raises(PreconditionError):
            ow_bound(D, np.eye(2), DitherSpec([0.5, 0.5]))

    def test_mc_path_agrees_with_closed_form(self):
        c1, c2 = PamConstellation(7, 20.0), PamConstellation(4, 9.0)
        D = PamProduct([c1, c2])
        H = [[0.8, 0.1], [-0.2, 0.5]]
        U = DitherSpec([c1.half_spacing, c2.half_spacing])
        closed = ow_bound(D, H, U)
        # pinv equals the inverse here but is routed through Monte Carlo with p = 2.0001
        mc = ow_bound(D, H, U, p=2.0 + 1e-9, estimator="inverse", samples=400_000, seed=5)
        assert mc.diagnostics["g1"] == "mc"
        assert abs(mc.value_bits - closed.value_bits) <= 3 * mc.diagnostics["g1_std_error_bits"] + 1e-6

    def test_identity_estimator_is_weaker_for_small_gain(self):
        c = PamConstellation(73, 500.0)
        D, U = PamProduct([c]), DitherSpec([c.half_spacing])
        inv = ow_bound(D, [[0.3]], U).value_bits
        ident = ow_bound(D, [[0.3]], U, estimator="identity", samples=100_000).value_bits
        assert ident < inv

    def test_below_mutual_information(self):
        c1, c2 = PamConstellation(6, 8.0), PamConstellation(3, 5.0)
        D = PamProduct([c1, c2])
        H = np.diag([0.9, 0.6])
        ow = ow_bound(D, H, DitherSpec([c1.half_spacing, c2.half_spacing])).value_bits
        mi = mutual_information_discrete(D, H, samples=50_000, seed=1)
        assert ow <= mi.value + 3 * mi.std_error


class TestOwPamDiag:
    def test_fig2(self):
        r = ow_pam_diag(FIG2_H, FIG2_X)
        assert r.params["points"] == [73, 25]
        expected = ow_scalar_closed_form(73, 500, 0.3) + ow_scalar_closed_form(25, 500, 0.1)
        assert r.value_bits == pytest.approx(expected, rel=1e-12)
        gap = duality_box_bound(FIG2_H, FIG2_X).value_bits - r.value_bits
        assert gap == pytest.approx(0.645 + 0.645, abs=0.02)
        assert gap < 1.64 * 2

    def test_single_point_dimension(self):
        A = 1.0  # 2 * 1.0 * 0.1 / sqrt(2 pi e) < 1
        r = ow_pam_diag(FIG2_H, Box([500.0, A]))
        assert r.params["points"][1] == 1 and r.params["per_dim"][1] == 0.0

    def test_ball(self):
        r = ow_pam_diag(FIG2_H, Ball(500.0, 2))
        A = 500.0 / math.sqrt(2)
        assert r.params["points"] == [pam_points_for(0.3, A), pam_points_for(0.1, A)]
        # every product point lies in the ball
        assert math.hypot(A, A) <= 500.0 * (1 + 1e-12)

    def test_needs_diagonal(self):
        with pytest.raises(DomainError):
            ow_pam_diag([[1.0, 0.2], [0.0, 1.0]], Box([1, 1]))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 3), st.floats(0.0, 1e4))
    def test_gap_per_dimension(self, h, A):
        gap = (duality_box_bound([[h]], Box([A])).value_bits
               - ow_pam_diag([[h]], Box([A])).value_bits)
        assert gap <= 1.6402


def _random_instances(count=30, seed=12):
    rng = np.random.default_rng(seed)
    out = []
    shapes = [(1, 1), (2, 2), (3, 3), (1, 3), (3, 1), (2, 4), (4, 2)]
    for k in range(count):
        n_r, n_t = shapes[k % len(shapes)]
        if k % 3 == 0 and n_r == n_t:
            h = np.diag(rng.uniform(0.1, 2.0, n_r))
        else:
            h = rng.standard_normal((n_r, n_t))
        base = rng.uniform(0.5, 2.0, n_t)
        out.append((h, base))
    return out


def test_lower_below_upper_on_random_ensemble():
    amps = np.geomspace(0.05, 400, 12)
    worst = math.inf
    for h, base in _random_instances():
        for A in amps:
            X = Box(A * base)
            low = max(r.value_bits for r in lower_bound_set(h, X) if r.certified)
            up = min(r.value_bits for r in upper_bound_set(h, X))
            worst = min(worst, up - low)
            assert low <= up + 1e-9
    assert worst >= -1e-9

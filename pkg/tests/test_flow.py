"""Flow stepping tests: oracles, monotone quantities, stop rules."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gaussflow import body as gb
from gaussflow import entropy as ge
from gaussflow import flow as gf
from gaussflow import sphere_grid as sg
from gaussflow.errors import InsufficientContraction, StepFailure


def circle(L=16):
    return sg.build_grid(1, L)


def sphere(L=8):
    return sg.build_grid(2, L)


def make_state(u, kind="unnormalized", alpha=1.0):
    return gf.FlowState(kind=kind, alpha=alpha, time=0.0, u=u)


class TestRhs:
    @pytest.mark.parametrize("dim,L", [(1, 16), (2, 8)])
    @pytest.mark.parametrize("alpha", [0.4, 1.0, 2.0])
    def test_unit_ball_normalized_stationary(self, dim, L, alpha):
        u = gb.ball(sg.build_grid(dim, L), 1.0)
        du = gf.rhs(make_state(u, "normalized", alpha))
        assert np.abs(du).max() <= 1e-12

    @pytest.mark.parametrize("dim,L,alpha", [(1, 16, 1.0), (1, 16, 2.0), (2, 8, 1.0)])
    def test_ball_unnormalized_constant(self, dim, L, alpha):
        R = 1.5
        u = gb.ball(sg.build_grid(dim, L), R)
        du = gf.rhs(make_state(u, "unnormalized", alpha))
        assert_allclose(du, -(R ** (-dim * alpha)), atol=1e-10)

    @pytest.mark.parametrize("dim,L", [(1, 16), (2, 8)])
    def test_ball_expanding(self, dim, L):
        R = 1.2
        u = gb.ball(sg.build_grid(dim, L), R)
        du = gf.rhs(make_state(u, "expanding", 1.0))
        assert_allclose(du, R**2 * R**dim, rtol=1e-10)

    def test_expanding_needs_positive_support(self):
        # disk of radius 0.3 centered at (0.9, 0): convex but origin outside
        g = circle()
        u = gb.SupportFunction(g, 0.3 + 0.9 * np.cos(g.thetas))
        with pytest.raises(ValueError, match="positive"):
            gf.rhs(make_state(u, "expanding", 1.0))

    def test_state_validation(self):
        u = gb.ball(circle(), 1.0)
        with pytest.raises(ValueError, match="kind"):
            gf.FlowState(kind="backward", alpha=1.0, time=0.0, u=u)
        with pytest.raises(ValueError, match="alpha"):
            gf.FlowState(kind="normalized", alpha=0.0, time=0.0, u=u)


class TestStep:
    def test_dt_honors_stability_and_request(self):
        st = make_state(gb.ball(circle(), 1.0), "normalized", 1.0)
        cap = gf._stable_dt(st)
        assert gf.step(st, 1e9).dt_last == pytest.approx(cap)
        assert gf.step(st, 1e-5).dt_last == pytest.approx(1e-5)
        with pytest.raises(ValueError):
            gf.step(st, -0.1)

    def test_normalized_ball_is_fixed_point(self):
        st = make_state(gb.ball(circle(), 1.0), "normalized", 1.0)
        for _ in range(50):
            st = gf.step(st, 0.02)
        assert np.abs(st.u.values - 1.0).max() <= 1e-12
        assert gb.volume(st.u) == pytest.approx(np.pi, abs=1e-12)
        assert st.rejected_steps == 0
        assert st.cumulative_rescale <= 1e-12

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_step_failure_after_twelve_halvings(self, monkeypatch):
        monkeypatch.setattr(gf, "_stable_dt", lambda state: 1e9)
        st = make_state(gb.ellipse(circle(), (1.4, 0.8)), "unnormalized", 1.0)
        with pytest.raises(StepFailure) as exc:
            gf.step(st, 1e6)
        assert exc.value.rejections == 12


class TestShrinkingCircleOracle:
    def test_tracks_closed_form(self):
        R0 = 1.3
        t_end = 0.8 * R0**2 / 2.0
        u0 = gb.ball(circle(16), R0)
        res = gf.run(u0, "unnormalized", 1.0, t_end, sample_every=t_end / 10)
        assert res.stop_reason == "t_end"
        assert len(res.samples) == 11
        for t, u in res.samples:
            R = np.sqrt(R0**2 - 2.0 * t)
            assert np.abs(u.values / R - 1.0).max() <= 1e-6
        times = [t for t, _ in res.samples]
        assert all(b > a for a, b in zip(times, times[1:]))
        assert res.final_state.rejected_steps == 0
        # limit point of a centered circle is the origin
        assert np.linalg.norm(res.limit_point) <= 1e-8
        # attached rescaled trajectory: unit-ball volumes, exact entropy shift
        assert res.rescaled is not None
        for _, un in res.rescaled.samples:
            assert gb.volume(un) == pytest.approx(np.pi, rel=1e-10)
        assert res.rescaled.entropy_deviation <= 1e-8

    def test_min_curvature_nondecreasing(self):
        u0 = gb.ellipse(circle(16), (1.4, 0.8))
        res = gf.run(u0, "unnormalized", 1.0, 0.3, sample_every=0.03)
        kmins = [r.k_min for r in res.records]
        assert all(b - a >= -1e-10 for a, b in zip(kmins, kmins[1:]))


class TestExtinction:
    def test_circle_bracket(self):
        br = gf.extinction_bracket(gb.ball(circle(16), 1.0), 1.0, u_stop=0.3)
        assert br.lower <= 0.5 + 1e-9 <= br.upper + 1e-6
        assert abs(br.lower - 0.5) <= 1e-6 and abs(br.upper - 0.5) <= 1e-6

    def test_unit_sphere_bracket_third(self):
        br = gf.extinction_bracket(gb.ball(sphere(8), 1.0), 1.0, u_stop=0.4)
        assert br.lower >= 1.0 / 3.0 - 1e-4
        assert br.upper <= 1.0 / 3.0 + 1e-4


class TestNormalizedEllipse:
    def test_entropy_monotone_dissipation_volume(self):
        g = circle(24)
        u0 = gb.ellipse(g, (2.0, 0.5))
        res = gf.run(u0, "normalized", 1.0, 0.01, sample_every=2.5e-4,
                     stop_residual=None)
        rec = res.records
        assert len(rec) >= 15
        for r in rec:
            assert r.volume == pytest.approx(np.pi, abs=1e-10)
            assert r.dissipation >= -1e-12
        ents = [r.entropy for r in rec]
        assert all(b - a <= 1e-8 for a, b in zip(ents, ents[1:]))
        # centered finite difference of the entropy matches -D
        for k in range(1, len(rec) - 1):
            fd = (rec[k + 1].entropy - rec[k - 1].entropy) / (
                rec[k + 1].time - rec[k - 1].time)
            assert abs(fd + rec[k].dissipation) <= 1e-3 * abs(rec[k].dissipation)

    def test_inapplicable_fields_are_nan(self):
        res = gf.run(gb.ellipse(circle(16), (1.25, 0.8)), "normalized", 1.0,
                     0.01, stop_residual=None)
        r = res.records[-1]
        assert np.isnan(r.j1) and np.isnan(r.q)
        assert np.isfinite(r.entropy) and np.isfinite(r.entropy_origin)
        assert np.isfinite(r.dissipation) and np.isfinite(r.rho_minus)


class TestConvergenceToBall:
    def test_symmetric_n1(self):
        u0 = gb.random_body(5, 1, 16, 0.1, centrally_symmetric=True)
        res = gf.run(u0, "normalized", 1.0, 12.0, sample_every=0.5)
        final = res.final_state.u
        assert gf.soliton_residual(final, 1.0).residual <= 1e-6
        assert np.abs(final.values - 1.0).max() <= 1e-4
        # support and curvature stay in a fixed band once settled
        late = [r for r in res.records if r.time >= 1.0]
        assert late and all(0.5 <= r.u_min and r.u_max <= 2.0 for r in late)
        assert all(r.k_min >= 0.1 for r in late)

    def test_symmetric_n2(self):
        u0 = gb.random_body(3, 2, 8, 0.04, centrally_symmetric=True)
        res = gf.run(u0, "normalized", 1.0, 5.0, sample_every=1.0,
                     stop_residual=1e-5)
        final = res.final_state.u
        assert gf.soliton_residual(final, 1.0).residual <= 1e-4
        assert np.abs(final.values - 1.0).max() <= 1e-3


class TestStops:
    def test_residual_stop_at_start(self):
        res = gf.run(gb.ball(circle(), 1.0), "normalized", 1.0, 5.0)
        assert res.stop_reason == "residual"
        assert len(res.samples) == 1

    def test_u_floor_stop(self):
        res = gf.run(gb.ball(circle(), 0.5), "unnormalized", 1.0, 0.2,
                     u_floor=0.3)
        assert res.stop_reason == "u_floor"
        assert res.final_state.u.values.min() <= 0.3
        assert res.final_state.time < 0.125

    def test_max_steps_stop(self):
        res = gf.run(gb.ball(circle(), 1.0), "unnormalized", 1.0, 0.3,
                     max_steps=5)
        assert res.stop_reason == "max_steps"

    def test_unnormalized_volume_gate_absent(self):
        # unnormalized runs accept any volume; normalized runs do not
        u = gb.ball(circle(), 1.2)
        with pytest.raises(ValueError, match="pre-normalized"):
            gf.run(u, "normalized", 1.0, 0.1)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_step_failure_attaches_partial(self, monkeypatch):
        monkeypatch.setattr(gf, "_stable_dt", lambda state: 1e9)
        u0 = gb.ellipse(circle(), (1.4, 0.8))
        with pytest.raises(StepFailure) as exc:
            gf.run(u0, "unnormalized", 1.0, 1.0)
        assert exc.value.partial.records


class TestRecentering:
    def test_normalized_run_starts_at_entropy_point(self):
        u0 = gb.random_body(11, 1, 16, 0.08)
        zg = ge.entropy_point(u0, 1.0).point
        res = gf.run(u0, "normalized", 1.0, 0.005, stop_residual=None)
        assert_allclose(res.samples[0][1].basepoint, u0.basepoint + zg, atol=1e-12)
        res2 = gf.run(u0, "normalized", 1.0, 0.005, stop_residual=None,
                      recenter=False)
        assert_allclose(res2.samples[0][1].basepoint, u0.basepoint, atol=1e-15)


class TestRescaledLimit:
    @pytest.mark.parametrize("alpha,t_end", [(0.5, 0.5), (2.0, 0.36)])
    def test_power_mean_about_limit_point(self, alpha, t_end):
        u0 = gb.ellipse(circle(16), (1.4, 0.8))
        res = gf.run(u0, "unnormalized", alpha, t_end, sample_every=t_end / 8)
        assert res.rescaled is not None
        t, un = res.rescaled.samples[-1]
        assert gb.volume(un) == pytest.approx(np.pi, rel=1e-10)
        m = sg.average(un.grid, un.values ** (1.0 - 1.0 / alpha))
        if alpha < 1.0:
            assert m <= 1.0 + 1e-6
        else:
            assert m >= 1.0 - 1e-6

    def test_insufficient_contraction(self):
        u = gb.ball(circle(), 1.0)
        with pytest.raises(InsufficientContraction):
            gf.rescale_trajectory([(0.0, u), (0.01, gb.scale(u, 0.99))], 1.0)


class TestSolitonResidual:
    @pytest.mark.parametrize("dim,L", [(1, 16), (2, 8)])
    @pytest.mark.parametrize("alpha", [1.0 / 3.0, 2.0])
    def test_ball_scale_covariance(self, dim, L, alpha):
        R = 1.7
        sr = gf.soliton_residual(gb.ball(sg.build_grid(dim, L), R), alpha)
        assert sr.residual <= 1e-12
        assert sr.lam == pytest.approx(R ** (-(1.0 + dim * alpha)), rel=1e-12)

    def test_ellipse_is_affine_soliton(self):
        u = gb.ellipse(circle(128), (2.0, 0.5))
        assert gf.soliton_residual(u, 1.0 / 3.0).residual <= 1e-8


class TestExpanding:
    def test_ball_scale_invariants_vanish(self):
        res = gf.run(gb.ball(circle(16), 1.0), "expanding", 1.0, 0.2,
                     sample_every=0.05)
        for r in res.records:
            assert abs(r.q) <= 1e-10

    def test_q_and_q_minus_j3_nonincreasing(self):
        u0 = gb.ellipse(circle(16), (1.4, 0.8))
        res = gf.run(u0, "expanding", 1.0, 0.25, sample_every=0.025)
        rec = res.records
        assert all(np.isfinite(r.q) and np.isfinite(r.j3) for r in rec)
        qs = [r.q for r in rec]
        assert all(b - a <= 1e-8 for a, b in zip(qs, qs[1:]))
        qj = [r.q - r.j3 for r in rec]
        assert all(b - a <= 1e-8 for a, b in zip(qj, qj[1:]))
        vols = [r.volume for r in rec]
        assert all(b > a for a, b in zip(vols, vols[1:]))
        # the entropy point is invariant under the expanding flow
        drift = [np.linalg.norm(r.entropy_point - rec[0].entropy_point)
                 for r in rec]
        assert max(drift) <= 1e-6

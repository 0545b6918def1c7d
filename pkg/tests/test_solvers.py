"""Solver steps, trajectory recording, convergence orders, determinism."""

import numpy as np
import pytest

from bdense.errors import ConfigError, ContractError, SingularityError
from bdense.network import ScoreNet
from bdense.schedule import build_schedule, forward_diffuse
from bdense.solvers import (TimeGrid, ddim_step, euler_step, heun_step, sampling_grid,
                            solve, sub_grid)
from bdense.tensor import clear_tape


@pytest.fixture(autouse=True)
def fresh_tape():
    clear_tape()
    yield
    clear_tape()


@pytest.fixture(scope="module")
def vp():
    return build_schedule("vp_linear", 1024)


@pytest.fixture(scope="module")
def edm():
    return build_schedule("edm_sigma", 64, sigma_min=0.01, sigma_max=2.0)


class ConstEps:
    """Oracle net predicting a fixed noise vector."""

    def __init__(self, eps):
        self.eps = np.asarray(eps, dtype=np.float32)

    def predict_eps(self, x, t, schedule):
        return np.broadcast_to(self.eps, np.asarray(x).shape).copy()

    def predict_x0(self, x, t, schedule):
        a, s = schedule.alpha_sigma(t)
        return (np.asarray(x) - s * self.predict_eps(x, t, schedule)) / a


class LinearField:
    """Oracle for the linear decay field: the state shrinks like d = -x along
    the integration direction (decreasing sigma). In sigma coordinates that
    velocity is (x - x0_hat)/t = +x, i.e. x0_hat = x*(1 - t)."""

    def predict_x0(self, x, t, schedule):
        return np.asarray(x, dtype=np.float32) * (1.0 - float(t))

    def predict_eps(self, x, t, schedule):
        return np.asarray(x, dtype=np.float32)


class TestDdimStep:
    def test_zero_noise_prediction_rescales(self, vp):
        t, t_prev = 512, 256
        a, _ = vp.alpha_sigma(t)
        a_prev, _ = vp.alpha_sigma(t_prev)
        z = np.array([[2.0, -1.0]], dtype=np.float32)
        out = ddim_step(ConstEps([0.0, 0.0]), z, t, t_prev, vp)
        np.testing.assert_allclose(out, a_prev * z / a, rtol=1e-5)

    def test_null_step(self, vp):
        z = np.array([[1.0, 1.0]], dtype=np.float32)
        np.testing.assert_array_equal(ddim_step(ConstEps([0.5, 0.5]), z, 100, 100, vp), z)

    def test_exact_oracle_lands_on_forward_diffuse(self, vp):
        # A net that predicts the exact eps of a known (x0, eps) pair moves
        # z_t onto the forward-diffused point at t_prev.
        rng = np.random.default_rng(0)
        x0 = rng.standard_normal((4, 2)).astype(np.float32)
        eps = rng.standard_normal((4, 2)).astype(np.float32)
        for t, t_prev in ((1024, 512), (800, 700), (64, 0)):
            z = forward_diffuse(x0, eps, t, vp).numpy()
            stepped = ddim_step(ConstEps(eps[0]) if False else _ExactEps(eps), z, t, t_prev, vp)
            expected = forward_diffuse(x0, eps, t_prev, vp).numpy()
            np.testing.assert_allclose(stepped, expected, atol=2e-4)

    def test_order_violation(self, vp):
        with pytest.raises(ContractError):
            ddim_step(ConstEps([0.0, 0.0]), np.ones((1, 2)), 10, 20, vp)

    def test_singular_alpha(self):
        sched = build_schedule("vp_linear", 16, beta_min=0.5, beta_max=0.999999)
        # alpha at the last step underflows the 1e-6 floor
        assert sched.alpha[-1] < 1e-6
        with pytest.raises(SingularityError):
            ddim_step(ConstEps([0.0]), np.ones((1, 1)), 16, 0, sched)


class _ExactEps(ConstEps):
    def __init__(self, eps):
        self.eps = np.asarray(eps, dtype=np.float32)

    def predict_eps(self, x, t, schedule):
        return self.eps.copy()


class TestEulerHeun:
    def test_fixed_point(self, edm):
        class Identity:
            def predict_x0(self, x, t, schedule):
                return np.asarray(x, dtype=np.float32).copy()

        x = np.array([[0.5, -0.5]], dtype=np.float32)
        np.testing.assert_allclose(euler_step(Identity(), x, 1.0, 0.5, edm), x)

    def test_hand_euler(self, edm):
        # d = -x, one step from x = 1 with h = 0.1 lands on 0.9.
        out = euler_step(LinearField(), np.array([[1.0]]), 1.0, 0.9, edm)
        assert out[0, 0] == pytest.approx(0.9, abs=1e-6)

    def test_constant_field_heun_equals_euler(self, edm):
        class ConstField:
            # x0_hat = x - t*c gives d = c everywhere.
            def predict_x0(self, x, t, schedule):
                return np.asarray(x, dtype=np.float32) - float(t) * 0.7

        x = np.array([[2.0]], dtype=np.float32)
        e = euler_step(ConstField(), x, 1.0, 0.4, edm)
        h = heun_step(ConstField(), x, 1.0, 0.4, edm)
        np.testing.assert_allclose(e, h, rtol=1e-6)

    def test_final_step_to_zero_degenerates_to_euler(self, edm):
        x = np.array([[1.5]], dtype=np.float32)
        e = euler_step(LinearField(), x, 0.5, 0.0, edm)
        h = heun_step(LinearField(), x, 0.5, 0.0, edm)
        np.testing.assert_array_equal(e, h)

    def test_sigma_zero_start_is_singular(self, edm):
        with pytest.raises(SingularityError):
            euler_step(LinearField(), np.ones((1, 1)), 0.0, -1.0, edm)

    def test_requires_edm_schedule(self, vp):
        with pytest.raises(ConfigError):
            euler_step(LinearField(), np.ones((1, 2)), 512, 256, vp)

    @staticmethod
    def _order_slope(method):
        # Integrate the decay field from t=1 down to t=0.01; the exact
        # solution decays to x(1) * exp(-(1 - 0.01)).
        sched = build_schedule("edm_sigma", 16, sigma_min=0.005, sigma_max=2.0)
        x0 = np.array([[1.0]], dtype=np.float32)
        exact = np.exp(-(1.0 - 0.01))
        hs, errs = [], []
        for h in (0.1, 0.05, 0.025, 0.0125):
            n = round(0.99 / h)
            grid = TimeGrid(sched, tuple(np.linspace(1.0, 0.01, n + 1)))
            traj = solve(_Field64(), x0, grid, method)
            errs.append(abs(float(traj.endpoint()[0, 0]) - exact))
            hs.append(0.99 / n)
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        return slope

    def test_euler_first_order(self):
        assert 0.7 <= self._order_slope("euler") <= 1.3

    def test_heun_second_order(self):
        assert 1.7 <= self._order_slope("heun") <= 2.3


class _Field64(LinearField):
    """Decay field with float64 state inside the prediction, so convergence
    order measurements are not floored by float32 rounding at small steps."""

    def predict_x0(self, x, t, schedule):
        return np.asarray(x, dtype=np.float64) * (1.0 - float(t))


class TestGrids:
    def test_sampling_grid_endpoints(self, vp, edm):
        g = sampling_grid(vp, 64)
        assert g.times[0] == 1024 and g.times[-1] == 0 and g.intervals == 64
        ge = sampling_grid(edm, 4)
        assert ge.times[0] == pytest.approx(2.0) and ge.times[-1] == 0.0

    def test_sampling_grid_divisibility(self, vp):
        with pytest.raises(ConfigError):
            sampling_grid(vp, 100)

    def test_sub_grid_vp_integer_split(self, vp):
        g = sub_grid(vp, 512, 480, 2)
        assert g.times == (512, 496, 480)
        with pytest.raises(ConfigError):
            sub_grid(vp, 512, 480, 7)

    def test_sub_grid_edm_geometric(self, edm):
        g = sub_grid(edm, 1.0, 0.1, 4)
        ratios = np.diff(np.log(g.times))
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)

    def test_sub_grid_into_zero(self, edm):
        g = sub_grid(edm, 1.0, 0.0, 3)
        assert g.times[-1] == 0.0 and len(g.times) == 4

    def test_grid_must_decrease(self, vp):
        with pytest.raises(ConfigError):
            TimeGrid(vp, (10, 10, 0))


class TestSolve:
    def test_single_interval_equals_single_step(self, vp):
        net = ConstEps([0.3, -0.3])
        z = np.random.default_rng(1).standard_normal((5, 2)).astype(np.float32)
        grid = TimeGrid(vp, (1024, 0))
        traj = solve(net, z, grid, "ddim")
        np.testing.assert_array_equal(traj.endpoint(), ddim_step(net, z, 1024, 0, vp))

    def test_trajectory_length(self, vp):
        net = ConstEps([0.0, 0.0])
        z = np.ones((2, 2), dtype=np.float32)
        traj = solve(net, z, sampling_grid(vp, 16), "ddim")
        assert len(traj.states) == 17
        assert traj.intervals == 16

    def test_records_initial_state(self, vp):
        z = np.full((1, 2), 3.0, dtype=np.float32)
        traj = solve(ConstEps([0.0, 0.0]), z, sampling_grid(vp, 8), "ddim")
        np.testing.assert_array_equal(traj.states[0], z)

    def test_trained_net_bitwise_reproducible(self, vp):
        net = ScoreNet(channels=2, hidden=(16, 16), time_dim=8, seed=0)
        rng = np.random.default_rng(2)
        z = rng.standard_normal((8, 2)).astype(np.float32)
        grid = sampling_grid(vp, 64)
        a = solve(net, z, grid, "ddim").endpoint()
        b = solve(net, z, grid, "ddim").endpoint()
        np.testing.assert_array_equal(a, b)

    def test_no_tape_nodes_recorded(self, edm):
        from bdense.tensor import active_tape
        net = ScoreNet(channels=2, hidden=(16, 16), time_dim=8, seed=0)
        z = np.ones((3, 2), dtype=np.float32)
        before = len(active_tape().nodes)
        solve(net, z, sampling_grid(edm, 4), "heun")
        assert len(active_tape().nodes) == before

    def test_refinement_reduces_endpoint_error(self):
        # Doubling grid density shrinks the gap to a 10x-fine reference.
        sched = build_schedule("edm_sigma", 16, sigma_min=0.005, sigma_max=2.0)
        x0 = np.array([[1.0]], dtype=np.float32)
        field = _Field64()

        def endpoint(n):
            grid = TimeGrid(sched, tuple(np.linspace(2.0, 0.01, n + 1)))
            return float(solve(field, x0, grid, "euler").endpoint()[0, 0])

        ref = endpoint(400)
        errs = [abs(endpoint(n) - ref) for n in (5, 10, 20, 40)]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_unknown_method(self, vp):
        with pytest.raises(ConfigError):
            solve(ConstEps([0.0, 0.0]), np.ones((1, 2)), sampling_grid(vp, 4), "rk45")

    def test_csv_export(self, vp, tmp_path):
        traj = solve(ConstEps([0.0, 0.0]), np.ones((1, 2), dtype=np.float32),
                     sampling_grid(vp, 4), "ddim")
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x0,x1"
        assert len(lines) == 6

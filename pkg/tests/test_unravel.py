from __future__ import annotations

import math
import unittest

import numpy as np

from framework.console import set_quiet
from framework.errors import PreconditionError
from framework.models import (
    InitialCondition,
    ModelParams,
    MomentumGrid,
    PDist,
    TrajectoryState,
    field_l1_distance,
    gaussian_density,
    momentum_marginal,
    product_field,
)
from framework.qmat import Observable, QubitDensity, trace_distance
from framework.solvers import propagate_open, propagate_qubit_marginal
from framework.unravel import (
    EnsembleResult,
    EnsembleSpec,
    SdeConfig,
    born_statistics,
    ensemble_summary,
    mean_qubit_state,
    noise_coefficients,
    reconstruct_field,
    run_ensemble,
    step_sde,
    step_sde_kraus,
    trajectory_rng,
    trajectory_rows,
)

SATURATED = ModelParams(lam=1.0, gamma_c=0.25, gamma_q=0.25)


def setUpModule() -> None:
    set_quiet(True)


def tearDownModule() -> None:
    set_quiet(False)


def _init(rho0: QubitDensity, p_dist: PDist | None = None) -> InitialCondition:
    return InitialCondition(rho0=rho0, p_dist=p_dist or PDist.delta(0.0))


def _run(
    params: ModelParams,
    init: InitialCondition,
    n_traj: int,
    dt: float,
    t_final: float,
    stride: int | None = None,
    seed: int = 5,
    threads: int = 1,
    allow_violation: bool = False,
    **config: object,
) -> EnsembleResult:
    steps = int(round(t_final / dt))
    cfg = SdeConfig(dt=dt, t_final=t_final, record_stride=stride or steps, **config)
    spec = EnsembleSpec(n_traj=n_traj, seed=seed, config=cfg, allow_violation=allow_violation)
    return run_ensemble(spec, init, params, threads=threads)


class ConfigTests(unittest.TestCase):
    def test_validation(self) -> None:
        with self.assertRaises(PreconditionError):
            SdeConfig(dt=0.0)
        with self.assertRaises(PreconditionError):
            SdeConfig(dt=0.3, t_final=1.0)
        with self.assertRaises(PreconditionError):
            SdeConfig(record_stride=0)
        with self.assertRaises(PreconditionError):
            SdeConfig(scheme="milstein")  # type: ignore[arg-type]
        with self.assertRaises(PreconditionError):
            EnsembleSpec(n_traj=0, seed=1)
        with self.assertRaises(PreconditionError):
            EnsembleSpec(n_traj=1, seed=-1)

    def test_last_step_always_recorded(self) -> None:
        cfg = SdeConfig(dt=0.1, t_final=1.0, record_stride=3)
        self.assertEqual(cfg.n_steps, 10)
        self.assertEqual(cfg.record_steps().tolist(), [0, 3, 6, 9, 10])


class NoiseTests(unittest.TestCase):
    def test_coefficients(self) -> None:
        sigma_p, kappa = noise_coefficients(SATURATED)
        self.assertAlmostEqual(sigma_p, math.sqrt(0.5), places=14)
        self.assertAlmostEqual(kappa, -1.0 / math.sqrt(2.0), places=14)
        self.assertEqual(noise_coefficients(ModelParams(lam=0.0, gamma_c=0.5)), (1.0, 0.0))

    def test_no_diffusion_means_no_unraveling(self) -> None:
        with self.assertRaises(PreconditionError):
            noise_coefficients(ModelParams(lam=1.0))
        with self.assertRaises(PreconditionError):
            _run(ModelParams(lam=1.0, gamma_q=1.0), _init(QubitDensity.named("zero")), 1, 0.1, 1.0)

    def test_streams_are_per_trajectory(self) -> None:
        a = trajectory_rng(42, 3).standard_normal(5)
        b = trajectory_rng(42, 3).standard_normal(5)
        c = trajectory_rng(42, 4).standard_normal(5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))


class StepTests(unittest.TestCase):
    def test_eigenstate_only_drifts(self) -> None:
        state = TrajectoryState(t=0.0, p=0.5, rho=QubitDensity.named("zero"))
        dt, dw = 0.01, 0.07
        for step in (step_sde, step_sde_kraus):
            out = step(state, SATURATED, dt, dw)
            np.testing.assert_allclose(out.rho.matrix, np.diag([1.0, 0.0]), atol=1e-15)
            self.assertAlmostEqual(out.p, 0.5 - dt + math.sqrt(0.5) * dw, places=14)
            self.assertAlmostEqual(out.t, dt, places=15)

    def test_deterministic_dephasing(self) -> None:
        state = TrajectoryState(t=0.0, p=0.0, rho=QubitDensity.named("plus"))
        dt = 1e-3
        out = step_sde(state, SATURATED, dt, 0.0)
        self.assertAlmostEqual(out.rho.matrix[0, 1].real, 0.5 * (1.0 - 4 * 0.25 * dt), places=14)
        self.assertEqual(out.p, 0.0)

    def test_euler_step_keeps_trace(self) -> None:
        rng = np.random.default_rng(4)
        params = SATURATED.replace(q=0.7, a_op=Observable.named("sigma_x"))
        for _ in range(20):
            v = rng.normal(size=3)
            rho = QubitDensity.from_bloch(*(0.9 * v / np.linalg.norm(v)))
            state = TrajectoryState(t=0.0, p=0.0, rho=rho)
            out = step_sde(state, params, 1e-3, float(rng.normal() * 0.03), renormalize=False)
            self.assertAlmostEqual(complex(np.trace(out.rho.matrix)).real, 1.0, places=12)

    def test_kraus_step_keeps_pure_states_pure_at_saturation(self) -> None:
        rng = np.random.default_rng(8)
        state = TrajectoryState(t=0.0, p=0.0, rho=QubitDensity.polar(1.1, 0.4))
        params = SATURATED.replace(q=0.5)
        for _ in range(200):
            state = step_sde_kraus(state, params, 1e-3, float(rng.normal() * math.sqrt(1e-3)))
        rho = state.rho.matrix
        self.assertAlmostEqual(float(np.trace(rho @ rho).real), 1.0, places=10)


class KernelTests(unittest.TestCase):
    def _reference(self, scheme: str) -> tuple[float, np.ndarray]:
        params = SATURATED.replace(q=0.5, a_op=Observable.named("sigma_x"))
        rho0 = QubitDensity.from_bloch(0.3, 0.4, 0.5)
        init = _init(rho0, PDist.gaussian(0.2, 0.5))
        dt, n_steps = 1e-3, 200
        result = _run(params, init, 1, dt, n_steps * dt, scheme=scheme, seed=77)

        rng = trajectory_rng(77, 0)
        p0 = 0.2 + 0.5 * rng.standard_normal()
        noise = rng.standard_normal(n_steps)
        state = TrajectoryState(t=0.0, p=p0, rho=rho0)
        step = step_sde_kraus if scheme == "kraus" else step_sde
        for z in noise:
            state = step(state, params, dt, math.sqrt(dt) * z)
        self.assertAlmostEqual(result.p[0, 0], p0, places=14)
        self.assertAlmostEqual(result.p[-1, 0], state.p, places=9)
        return state.p, np.abs(result.rho[-1, 0] - state.rho.matrix)

    def test_vectorised_kraus_matches_matrix_step(self) -> None:
        _, err = self._reference("kraus")
        self.assertLess(float(err.max()), 1e-9)

    def test_vectorised_euler_matches_matrix_step(self) -> None:
        _, err = self._reference("euler")
        self.assertLess(float(err.max()), 1e-9)


class DeterminismTests(unittest.TestCase):
    def test_thread_count_does_not_change_results(self) -> None:
        init = _init(QubitDensity.named("plus"), PDist.gaussian(0.0, 1.0))
        one = _run(SATURATED, init, 1100, 0.01, 0.5, stride=10, threads=1)
        three = _run(SATURATED, init, 1100, 0.01, 0.5, stride=10, threads=3)
        np.testing.assert_array_equal(one.p, three.p)
        np.testing.assert_array_equal(one.rho, three.rho)
        np.testing.assert_array_equal(one.min_eigenvalue, three.min_eigenvalue)

    def test_trajectory_does_not_depend_on_ensemble_size(self) -> None:
        init = _init(QubitDensity.named("plus"))
        small = _run(SATURATED, init, 10, 0.01, 0.5)
        large = _run(SATURATED, init, 600, 0.01, 0.5)
        np.testing.assert_array_equal(small.p, large.p[:, :10])
        np.testing.assert_array_equal(small.rho, large.rho[:, :10])

    def test_seed_changes_results(self) -> None:
        init = _init(QubitDensity.named("plus"))
        a = _run(SATURATED, init, 20, 0.01, 0.5, seed=1)
        b = _run(SATURATED, init, 20, 0.01, 0.5, seed=2)
        self.assertFalse(np.array_equal(a.p, b.p))


class CollapseTests(unittest.TestCase):
    def test_eigenstate_never_moves(self) -> None:
        result = _run(SATURATED, _init(QubitDensity.named("zero")), 50, 0.01, 1.0)
        self.assertEqual(born_statistics(result, 0.99), (1.0, 0.0, 0.0))

    def test_superposition_splits_evenly(self) -> None:
        params = ModelParams(lam=-1.0, gamma_c=0.25, gamma_q=0.25, q=1.0)
        result = _run(params, _init(QubitDensity.named("plus")), 1000, 2e-3, 6.0)
        summary = ensemble_summary(result)
        born = summary["born"]
        self.assertLess(abs(born["frac_up"] - 0.5), 3.0 * math.sqrt(0.25 / 1000))
        self.assertLess(born["unresolved"], 0.02)
        # dp/dt = -lam <A>: the upper branch is pushed to positive momentum
        self.assertGreater(born["mean_final_p_up"], 3.0)
        self.assertLess(born["mean_final_p_down"], -3.0)

    def test_tilted_state_follows_born_rule(self) -> None:
        rho0 = QubitDensity.from_bloch(0.8, 0.0, 0.6)
        result = _run(SATURATED, _init(rho0), 1000, 2e-3, 6.0, stride=300)
        up, _, unresolved = born_statistics(result, 0.99)
        self.assertLess(abs(up - 0.8), 3.0 * math.sqrt(0.16 / 1000) + unresolved)

    def test_observable_expectation_is_a_martingale(self) -> None:
        rho0 = QubitDensity.from_bloch(0.8, 0.0, 0.6)
        result = _run(SATURATED, _init(rho0), 10_000, 2e-3, 2.0, stride=100, seed=17, threads=4)
        moments = ensemble_summary(result)["moments"]
        self.assertEqual(len(moments), 11)
        self.assertAlmostEqual(moments[0]["mean_a"], 0.6, places=12)
        for row in moments[1:]:
            self.assertLessEqual(abs(row["mean_a"] - 0.6), 3.0 * row["stderr_a"], msg=row["t"])

    def test_strong_dephasing_selects_branches(self) -> None:
        params = ModelParams(lam=1.0, gamma_c=0.0078125, gamma_q=8.0)
        result = _run(params, _init(QubitDensity.named("mixed")), 200, 1e-3, 0.25)
        born = ensemble_summary(result)["born"]
        self.assertLess(abs(born["frac_up"] - 0.5), 3.0 * math.sqrt(0.25 / 200))
        self.assertLess(born["unresolved"], 0.02)
        self.assertLess(born["mean_final_p_up"], -0.1)
        self.assertGreater(born["mean_final_p_down"], 0.1)


class PositivityTests(unittest.TestCase):
    def test_saturation_stays_pure_and_positive(self) -> None:
        dt = 0.01
        result = _run(SATURATED.replace(q=1.0), _init(QubitDensity.named("plus")), 200, dt, 2.0)
        self.assertGreaterEqual(result.min_eigenvalue_seen, -10.0 * dt)
        self.assertGreaterEqual(result.min_eigenvalue_seen, -1e-12)
        self.assertEqual(result.abort_count, 0)
        self.assertGreater(float(result.purity().min()), 1.0 - 1e-9)

    def test_extra_dephasing_mixes_trajectories(self) -> None:
        params = SATURATED.replace(gamma_q=0.5)
        result = _run(params, _init(QubitDensity.named("plus")), 500, 0.01, 5.0, stride=50)
        self.assertLess(float(result.purity(at=0.5).mean()), 0.95)
        rho = mean_qubit_state(result).matrix
        self.assertLess(float(np.trace(rho @ rho).real), 0.9)

    def test_violation_requires_opt_in(self) -> None:
        params = SATURATED.replace(gamma_q=0.0025)
        init = _init(QubitDensity.named("plus"))
        with self.assertRaisesRegex(PreconditionError, "trade-off"):
            _run(params, init, 50, 0.01, 1.0)
        result = _run(params, init, 50, 0.01, 1.0, allow_violation=True)
        self.assertEqual(result.abort_count, 50)
        self.assertLess(result.min_eigenvalue_seen, -1e-3)

    def test_euler_without_renormalization_keeps_trace(self) -> None:
        init = _init(QubitDensity.named("plus"))
        result = _run(SATURATED, init, 100, 1e-3, 0.5, scheme="euler", renormalize=False)
        traces = np.trace(result.rho[-1], axis1=1, axis2=2).real
        np.testing.assert_allclose(traces, 1.0, atol=1e-10)


class ReconstructionTests(unittest.TestCase):
    def test_single_trajectory_is_one_bin(self) -> None:
        grid = MomentumGrid(-8.0, 8.0, 64)
        result = _run(SATURATED, _init(QubitDensity.named("plus")), 1, 0.01, 1.0)
        fld = reconstruct_field(result, grid, 1.0)
        self.assertEqual(np.count_nonzero(momentum_marginal(fld)), 1)
        self.assertAlmostEqual(fld.normalization(), 1.0, places=12)

    def test_eigenstate_marginal_is_drift_diffusion(self) -> None:
        grid = MomentumGrid(-16.0, 16.0, 64)
        init = _init(QubitDensity.named("zero"), PDist.gaussian(0.0, 1.0))
        n = 2000
        result = _run(SATURATED, init, n, 0.01, 1.0)
        fld = reconstruct_field(result, grid, 1.0)
        self.assertLessEqual(float(np.max(np.abs(fld.values[:, 0, 1]))), 1e-15)
        expected = gaussian_density(grid.points, -1.0, 1.5)
        l1 = float(np.sum(np.abs(momentum_marginal(fld) - expected)) * grid.dp)
        self.assertLess(l1, 5.0 / math.sqrt(n))

    def test_ensemble_average_matches_master_field(self) -> None:
        grid = MomentumGrid(-10.0, 10.0, 64)
        init = _init(QubitDensity.named("plus"), PDist.gaussian(0.0, 1.0))
        exact = propagate_open(product_field(init, grid), SATURATED, 1.0)

        def distance(n: int) -> float:
            result = _run(SATURATED, init, n, 0.01, 1.0, seed=n)
            return field_l1_distance(reconstruct_field(result, grid, 1.0), exact)

        coarse, medium, fine = distance(1000), distance(4000), distance(16000)
        self.assertLess(medium, 0.3)
        # 16x the trajectories: n^(-1/2) gives 0.25, half the ideal slope gives 0.5
        self.assertLess(fine, 0.5 * coarse)

    def test_mean_state_matches_qubit_marginal(self) -> None:
        n = 2000
        init = _init(QubitDensity.named("plus"), PDist.gaussian(0.0, 1.0))
        params = SATURATED.replace(q=0.8)
        result = _run(params, init, n, 0.01, 1.0)
        exact = propagate_qubit_marginal(init.rho0, params, 1.0)
        distance = trace_distance(mean_qubit_state(result, at=1.0), exact)
        self.assertLess(distance, 5.0 / math.sqrt(n))

    def test_unrecorded_time_is_rejected(self) -> None:
        result = _run(SATURATED, _init(QubitDensity.named("plus")), 2, 0.01, 1.0)
        with self.assertRaises(PreconditionError):
            reconstruct_field(result, MomentumGrid(-8.0, 8.0, 64), 0.5)


class OutputTests(unittest.TestCase):
    def test_trajectory_rows_and_summary(self) -> None:
        result = _run(SATURATED, _init(QubitDensity.named("plus")), 3, 0.01, 1.0, stride=25)
        rows = trajectory_rows(result, 2)
        self.assertEqual(len(rows), 5)
        np.testing.assert_allclose([r[0] for r in rows], [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-12)
        np.testing.assert_allclose(rows[0][2:5], [1.0, 0.0, 0.0], atol=1e-12)
        with self.assertRaises(PreconditionError):
            trajectory_rows(result, 3)

        summary = ensemble_summary(result)
        self.assertEqual(summary["n_traj"], 3)
        self.assertEqual(summary["scheme"], "kraus")
        self.assertEqual(len(summary["moments"]), 5)
        self.assertEqual(summary["diagnostics"]["abort_count"], 0)


if __name__ == "__main__":
    unittest.main()

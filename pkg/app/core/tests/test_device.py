import unittest

import numpy as np

from abstracts.exception import InvalidInputError
from app.core.circuit import (
    CircuitSimulator,
    initial_node_state,
    relax_cells,
    solve_circuit_params,
    steady_state,
    step_node,
)
from app.core.device import (
    DeviceSimulator,
    bernoulli_residual,
    capacitor_voltage_for,
    cell_current,
    device_rhs,
    drain_current,
    drain_current_rate,
    gate_voltage,
    initial_state,
    omega_residual,
    reciprocal_residual,
    simulate_cells,
    translinear_output,
)
from models.ct import DifferentialValue
from models.dataset import Dataset
from models.device import DeviceParams
from models.hyperparams import Hyperparams, LinearModel
from models.trace import Tier

DP = DeviceParams()
CP = DP.circuit


def five_point_rate(values: np.ndarray, h: float) -> np.ndarray:
    """Central fourth-order d/dt at every sample but the two at each end."""
    return (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)


class TestCellLaws(unittest.TestCase):
    def test_gate_voltage_zero_at_specific_current(self):
        self.assertAlmostEqual(float(gate_voltage(DP.I_S, DP.I_S, DP)), 0.0, places=15)

    def test_read_out_depends_on_capacitor_only(self):
        state = initial_state(2e-9, 1e-8, 5e-9, DP)
        self.assertAlmostEqual(translinear_output(state, 1e-8, 5e-9, CP), 2e-9, delta=1e-21)
        self.assertAlmostEqual(float(cell_current(state.V_C, DP)), 2e-9, delta=1e-21)

    def test_capacitor_voltage_inverts_cell_current(self):
        Iw = np.array([1e-10, 3e-9, 4e-7])
        np.testing.assert_allclose(cell_current(capacitor_voltage_for(Iw, DP), DP), Iw, rtol=1e-12)

    def test_rest_point_matches_behavioral_steady_state(self):
        Idelta, Ix = 1e-8, 5e-9
        target = steady_state(Idelta, Ix, CP)
        state = initial_state(target, Idelta, Ix, DP)
        self.assertAlmostEqual(state.I_D / CP.u, 1.0, places=9)
        self.assertAlmostEqual(device_rhs(state, Idelta, Ix, DP) * CP.C / CP.u, 0.0, places=9)

    def test_inputs_must_be_positive(self):
        with self.assertRaises(InvalidInputError):
            initial_state(1e-9, 0.0, 1e-9, DP)
        state = initial_state(1e-9, 1e-9, 1e-9, DP)
        with self.assertRaises(InvalidInputError):
            device_rhs(state, 1e-9, -1e-9, DP)


class TestResiduals(unittest.TestCase):
    def test_analytic_rates_satisfy_every_form(self):
        I_D = np.array([1e-9, 1e-8, 1e-6])
        dI = drain_current_rate(I_D, DP)
        np.testing.assert_allclose(bernoulli_residual(I_D, dI, DP), 0.0, atol=1e-12)
        T = 1.0 / I_D
        dT = -dI / (I_D * I_D)
        np.testing.assert_allclose(reciprocal_residual(T, dT, DP), 0.0, atol=1e-12)
        Idelta, Iz = 1e-8, 2e-9
        omega = Idelta * Iz * T
        np.testing.assert_allclose(
            omega_residual(omega, Idelta * Iz * dT, Idelta, Iz, DP), 0.0, atol=1e-12
        )

    def test_simulated_trajectory_satisfies_bernoulli_form(self):
        Idelta, Ix = np.array([1e-8]), np.array([5e-9])
        V_C0 = capacitor_voltage_for(np.array([0.01 * steady_state(1e-8, 5e-9, CP)]), DP)
        times, V_C = simulate_cells(V_C0, Idelta, Ix, 1e-2, 2.5e-7, DP, samples=4000)
        I_D = drain_current(gate_voltage(Idelta, Ix, DP), V_C[:, 0], DP)
        dI = five_point_rate(I_D, times[1] - times[0])
        residual = bernoulli_residual(I_D[2:-2], dI, DP)
        self.assertLess(float(np.max(np.abs(residual))), 1e-8)

    def test_simulate_cells_rejects_bad_arguments(self):
        with self.assertRaises(InvalidInputError):
            simulate_cells(np.zeros(1), np.ones(1) * 1e-9, np.ones(1) * 1e-9, 1e-3, 0.0, DP)


class TestBehavioralEquivalence(unittest.TestCase):
    def test_cells_follow_exponential_relaxation(self):
        Idelta = np.array([1e-8, 4e-9, 2e-8])
        Ix = np.array([5e-9, 1e-8, 1e-9])
        Iw0 = np.array([1e-10, 8e-8, 2e-8])
        times, V_C = simulate_cells(
            capacitor_voltage_for(Iw0, DP), Idelta, Ix, 2e-2, 5e-6, DP, samples=4
        )
        for t, row in zip(times, V_C):
            expected = relax_cells(Iw0, Idelta, Ix, float(t), CP)
            np.testing.assert_allclose(cell_current(row, DP), expected, rtol=1e-6)


class TestRandomConstantInputs(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(11)
        cases = 100
        self.Idelta = 10 ** rng.uniform(-9.5, -7.5, cases)
        self.Ix = 10 ** rng.uniform(-9.5, -8.0, cases)
        target = steady_state(self.Idelta, self.Ix, CP)
        self.Iw0 = target * 10 ** rng.uniform(-1.0, 1.0, cases)
        settle = 3.0 / CP.decay_rate
        self.times, self.V_C = simulate_cells(
            capacitor_voltage_for(self.Iw0, DP), self.Idelta, self.Ix, settle, 1e-4, DP, samples=3
        )

    def test_cells_match_step_node_after_transient(self):
        for i in range(len(self.Iw0)):
            state = initial_node_state(0.0, CP).model_copy(update={"Iw_plus": float(self.Iw0[i])})
            split = DifferentialValue(plus=1e-9, minus=float(self.Idelta[i]))
            behavioral = step_node(state, float(self.Ix[i]), split, float(self.times[-1]), CP)
            device = float(cell_current(self.V_C[-1, i], DP))
            self.assertAlmostEqual(device / behavioral.Iw_plus, 1.0, delta=1e-3)

    def test_residuals_along_trajectories(self):
        # the fastest cells start near I_D = 10*u; 2000 samples resolve their transient
        times, V_C = simulate_cells(
            capacitor_voltage_for(self.Iw0, DP), self.Idelta, self.Ix, 5e-2, 2.5e-6, DP, samples=2000
        )
        h = times[1] - times[0]
        I_D = drain_current(gate_voltage(self.Idelta, self.Ix, DP), V_C, DP)
        T = 1.0 / I_D
        omega = self.Idelta * self.Ix * T
        interior = slice(2, -2)
        bernoulli = bernoulli_residual(I_D[interior], five_point_rate(I_D, h), DP)
        reciprocal = reciprocal_residual(T[interior], five_point_rate(T, h), DP)
        omega_form = omega_residual(
            omega[interior], five_point_rate(omega, h), self.Idelta, self.Ix, DP
        )
        self.assertLess(float(np.max(np.abs(bernoulli))), 1e-8)
        self.assertLess(float(np.max(np.abs(reciprocal))), 1e-8)
        self.assertLess(float(np.max(np.abs(omega_form))), 1e-8)

    def test_cell_current_ignores_device_constants(self):
        scaled = DP.model_copy(update={"I_D0": DP.I_D0 * 10, "I_S": DP.I_S * 3})
        runs = []
        for dp in (DP, scaled):
            _, V_C = simulate_cells(
                capacitor_voltage_for(self.Iw0, dp), self.Idelta, self.Ix, 0.3, 1e-4, dp, samples=30
            )
            runs.append(cell_current(V_C, dp))
        np.testing.assert_allclose(runs[1], runs[0], rtol=1e-9)


class TestDeviceSimulator(unittest.TestCase):
    def setUp(self):
        solution = solve_circuit_params(1e-3, 0.1)
        self.dp = DeviceParams(circuit=solution.params)
        self.hp = Hyperparams(alpha=1e-3, lambda_=0.1, delta_s=solution.delta_s, epochs=3)
        x = np.linspace(0.2, 1.0, 5)
        self.data = Dataset(name="ramp", X=x, y=0.6 * x, train_idx=np.arange(5), test_idx=[])

    def test_matches_circuit_tier(self):
        trace = DeviceSimulator(self.dp).train(self.data, self.hp)
        self.assertEqual(trace.tier, Tier.DEVICE)
        self.assertEqual(trace.epochs, 3)
        circuit = CircuitSimulator(self.dp.circuit).train(self.data, self.hp)
        np.testing.assert_allclose(
            trace.final_parameters(), circuit.final_parameters(), rtol=1e-2
        )

    def test_initial_weight_is_honoured(self):
        trace = DeviceSimulator(self.dp).train(
            self.data, self.hp.with_updates(epochs=1), LinearModel(weights=[0.6])
        )
        self.assertAlmostEqual(trace.weights_per_epoch[0][0], 0.6, delta=5e-3)

    def test_restricted_to_one_feature_without_bias(self):
        two = Dataset(name="two", X=[[0.1, 0.2]], y=[0.1], train_idx=[0], test_idx=[])
        with self.assertRaises(InvalidInputError):
            DeviceSimulator(self.dp).train(two, self.hp)
        with self.assertRaises(InvalidInputError):
            DeviceSimulator(self.dp).train(self.data, self.hp, LinearModel(weights=[0.0], bias=0.0))

    def test_invalid_substeps(self):
        with self.assertRaises(InvalidInputError):
            DeviceSimulator(substeps=0)


if __name__ == "__main__":
    unittest.main()

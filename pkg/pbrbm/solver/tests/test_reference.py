from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.test import SimpleTestCase

from solver import reference
from solver.exceptions import NewtonDivergence
from solver.geometry import SimDomain

NU, RHO_INF = 1.0, 0.0218


class SolvePb1dTests(SimpleTestCase):
    def test_zero_charge_gives_zero_potential(self):
        sol = reference.solve_pb_1d(NU, RHO_INF, 0.0, 1, 15, 141)
        np.testing.assert_array_equal(sol.phi, 0.0)
        self.assertEqual(sol.iterations, 0)

    def test_weak_charge_matches_linearization(self):
        sol = reference.solve_pb_1d(NU, RHO_INF, 0.01, 1, 15, 1401)
        linear = reference.linearized_1d(NU, RHO_INF, 0.01, 1, 15, sol.nodes)
        self.assertLessEqual(np.abs(sol.phi - linear).max(), 5e-3 * np.abs(linear).max())
        self.assertLessEqual(sol.residual_norm, 1e-10)

    def test_membrane_condition_and_sign(self):
        sol = reference.solve_pb_1d(NU, RHO_INF, 1.0, 1, 15, 1401)
        self.assertGreater(sol.phi[0], 0)
        self.assertTrue(np.all(np.diff(sol.phi) < 0))
        slope = (sol.phi[1] - sol.phi[0]) / sol.h
        self.assertAlmostEqual(slope, -1.0, delta=0.05)

    def test_second_order_self_convergence(self):
        solutions = [reference.solve_pb_1d(NU, RHO_INF, 1.0, 1, 15, n) for n in (141, 281, 561)]
        coarse, mid, fine = (sol.phi for sol in solutions)
        e1 = np.abs(coarse - mid[::2]).max()
        e2 = np.abs(mid[::2] - fine[::4]).max()
        self.assertAlmostEqual(e1 / e2, 4.0, delta=0.5)

    def test_newton_reports_the_last_residual(self):
        with self.assertRaises(NewtonDivergence) as caught:
            reference.solve_pb_1d(NU, RHO_INF, 1.0, 1, 15, 141, max_iter=1)
        self.assertGreater(caught.exception.residual, 1e-10)

    def test_grid_too_coarse(self):
        with self.assertRaises(ValueError):
            reference.solve_pb_1d(NU, RHO_INF, 1.0, 1, 15, 15)


class RadialTests(SimpleTestCase):
    def setUp(self):
        self.sol = reference.solve_pb_radial3d(1.0, 0.005, 0.04 * np.pi, 1, 10, 901)

    def test_surface_charge(self):
        self.assertAlmostEqual(self.sol.sigma_f, 0.01)
        self.assertAlmostEqual(reference.surface_charge(1.0, 2.0, SimDomain.interval(1, 15)), 1.0)

    def test_weak_charge_matches_screened_coulomb(self):
        linear = reference.linearized_radial3d(1.0, 0.005, 0.01, 1, 10, self.sol.nodes)
        self.assertLessEqual(np.abs(self.sol.phi - linear).max(), 1e-2 * np.abs(linear).max())

    def test_screening_charge_balances_the_membrane(self):
        free = self.sol.nu * self.sol.sigma_f * 4 * np.pi
        self.assertLessEqual(abs(reference.net_charge_defect(self.sol)), 1e-3 * free)

    def test_two_dimensional_shell_is_rejected(self):
        with self.assertRaises(ValueError):
            reference.solve_pb(SimDomain.shell(2, 1, 10), 1.0, 0.005, 0.01, 100)


class DensityTests(SimpleTestCase):
    def setUp(self):
        self.sol = reference.solve_pb_1d(NU, RHO_INF, 1.0, 1, 15, 1401)

    def test_boltzmann_product(self):
        rho_plus, rho_minus = reference.densities_from_phi(self.sol)
        np.testing.assert_allclose(rho_plus * rho_minus, RHO_INF ** 2)
        self.assertTrue(np.all(rho_plus[:-1] < rho_plus[1:]))

    def test_discrete_charge_balance_is_exact_in_1d(self):
        self.assertLessEqual(abs(reference.net_charge_defect(self.sol)), 1e-6)

    def test_fit_recovers_the_positive_charge(self):
        domain = SimDomain.interval(1, 15)
        rho_inf, sol = reference.fit_rho_inf(domain, NU, 1.0, 1.0, 1401)
        self.assertGreater(rho_inf, 0)
        self.assertAlmostEqual(sol.integrate(reference.densities_from_phi(sol)[0]), 1.0, places=8)
        self.assertEqual(sol.rho_inf, rho_inf)

    def test_grid_table_columns(self):
        columns, table = reference.grid_table(self.sol)
        self.assertEqual(columns, ("node", "phi", "rho_plus", "rho_minus"))
        self.assertEqual(table.shape, (1401, 4))


class TruncationTests(SimpleTestCase):
    def test_errors_decay_exponentially(self):
        with ThreadPoolExecutor(max_workers=2) as executor:
            table = reference.truncation_study(NU, RHO_INF, 1.0, [5, 10, 15, 20], 40, executor=executor)
        L, errors = np.array(table).T
        self.assertTrue(np.all(np.diff(errors) < 0))
        self.assertLessEqual(np.corrcoef(L, np.log(errors))[0, 1], -0.99)

    def test_full_length_has_no_error(self):
        table = reference.truncation_study(NU, RHO_INF, 1.0, [10, 20], 20, h=0.05)
        self.assertAlmostEqual(table[-1][1], 0.0, places=12)

    def test_lengths_beyond_reference(self):
        with self.assertRaises(ValueError):
            reference.truncation_study(NU, RHO_INF, 1.0, [10, 50], 40)

    def test_solutions_respect_the_decay_envelopes(self):
        for sigma_f in (0.1, 0.5, 1.0):
            sol = reference.solve_pb_1d(NU, RHO_INF, sigma_f, 1, 30, 2901)
            report = reference.decay_bound_check(sol)
            self.assertTrue(report.holds, f"sigma_f={sigma_f}: {report}")

    def test_decay_check_flags_a_wrong_solution(self):
        sol = reference.solve_pb_1d(NU, RHO_INF, 1.0, 1, 30, 2901)
        sol.phi = sol.phi * 3
        report = reference.decay_bound_check(sol)
        self.assertFalse(report.holds)
        self.assertGreater(report.max_violation, 0)

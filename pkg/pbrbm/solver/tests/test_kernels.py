import numpy as np
from django.test import SimpleTestCase

from solver.exceptions import SingularKernel
from solver.geometry import SimDomain
from solver.kernels import PhysicalParams, coulomb_force, coulomb_potential, external_field


class CoulombPotentialTests(SimpleTestCase):
    def test_values(self):
        self.assertAlmostEqual(float(coulomb_potential(1, 1.0, np.array([3.0]))), -1.5)
        self.assertAlmostEqual(float(coulomb_potential(2, 1.0, np.array([1.0, 0.0]))), 0.0)
        self.assertAlmostEqual(float(coulomb_potential(3, 1.0, np.array([0.0, 1.0, 0.0]))), 1 / (4 * np.pi))

    def test_singular_at_origin(self):
        for d in (2, 3):
            with self.assertRaises(SingularKernel):
                coulomb_potential(d, 1.0, np.zeros(d))
            with self.assertRaises(SingularKernel):
                coulomb_force(d, 1.0, np.zeros(d))


class CoulombForceTests(SimpleTestCase):
    def test_values(self):
        np.testing.assert_allclose(coulomb_force(1, 1.0, np.array([2.0])), [0.5])
        np.testing.assert_allclose(coulomb_force(3, 1.0, np.array([1.0, 0.0, 0.0])), [1 / (4 * np.pi), 0, 0])
        np.testing.assert_allclose(coulomb_force(3, 1.0, np.array([2.0, 0.0, 0.0])), [1 / (16 * np.pi), 0, 0])

    def test_one_dimensional_force_vanishes_at_coincidence(self):
        np.testing.assert_array_equal(coulomb_force(1, 1.0, np.array([0.0])), [0.0])

    def test_force_is_negative_gradient_of_potential(self):
        rng = np.random.default_rng(11)
        step = 1e-5
        for d in (1, 2, 3):
            for _ in range(100):
                direction = rng.standard_normal(d)
                x = direction / np.linalg.norm(direction) * rng.uniform(0.5, 20.0)
                gradient = np.empty(d)
                for axis in range(d):
                    e = np.zeros(d)
                    e[axis] = step
                    gradient[axis] = (coulomb_potential(d, 0.7, x + e) - coulomb_potential(d, 0.7, x - e)) / (2 * step)
                np.testing.assert_allclose(coulomb_force(d, 0.7, x), -gradient, rtol=1e-6,
                                           atol=1e-6 * np.abs(gradient).max())

    def test_antisymmetry(self):
        rng = np.random.default_rng(12)
        for d in (1, 2, 3):
            x = rng.uniform(-5, 5, size=(50, d))
            np.testing.assert_allclose(coulomb_force(d, 1.3, -x), -coulomb_force(d, 1.3, x))


class ExternalFieldTests(SimpleTestCase):
    def test_half_interval_drive_is_constant(self):
        params = PhysicalParams(nu=1.0, Q_f=2.0)
        field = external_field(params, SimDomain.interval(1, 15), np.array([[5.0], [14.0]]))
        np.testing.assert_allclose(field, [[0.5], [0.5]])

    def test_shell_field_scales_with_free_charge(self):
        params = PhysicalParams(nu=1.0, Q_f=10.0, x_c=(0.0, 0.0, 0.0))
        field = external_field(params, SimDomain.shell(3, 1, 10), np.array([2.0, 0.0, 0.0]))
        np.testing.assert_allclose(field, [10 / (16 * np.pi), 0, 0])
        self.assertAlmostEqual(field[0], 0.1989, places=4)

    def test_zero_free_charge_gives_zero_field(self):
        params = PhysicalParams(nu=1.0, Q_f=0.0, x_c=(0.0, 1.5, 0.0))
        points = np.random.default_rng(2).uniform(3, 9, size=(20, 3))
        np.testing.assert_array_equal(external_field(params, SimDomain.shell(3, 2, 10), points), 0.0)

    def test_off_center_charge_must_match_dimension(self):
        params = PhysicalParams(nu=1.0, Q_f=1.0, x_c=(0.0, 1.5))
        with self.assertRaises(ValueError):
            external_field(params, SimDomain.shell(3, 2, 10), np.array([3.0, 0.0, 0.0]))

    def test_free_charge_must_sit_inside_the_cell(self):
        points = np.array([[3.0, 0.0, 0.0]])
        for x_c in ((0.0, 2.0, 0.0), (0.0, 5.0, 0.0)):
            with self.assertRaises(ValueError):
                external_field(PhysicalParams(nu=1.0, Q_f=1.0, x_c=x_c), SimDomain.shell(3, 2, 10), points)
        params = PhysicalParams(nu=1.0, Q_f=1.0, x_c=(0.0, 1.99, 0.0))
        field = external_field(params, SimDomain.shell(3, 2, 10), points)
        self.assertTrue(np.all(np.isfinite(field)))


class PhysicalParamsTests(SimpleTestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            PhysicalParams(nu=0.0, Q_f=1.0)
        with self.assertRaises(ValueError):
            PhysicalParams(nu=1.0, Q_f=1.0, q=0.0)
        with self.assertRaises(ValueError):
            PhysicalParams(nu=1.0, Q_f=1.0, rho_inf=-1.0)


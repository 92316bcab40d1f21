import numpy as np
from django.test import SimpleTestCase

from solver.exceptions import NotOnBoundary
from solver.geometry import SimDomain, unit_ball_volume


class UnitBallVolumeTests(SimpleTestCase):
    def test_known_values(self):
        self.assertAlmostEqual(unit_ball_volume(1), 2.0)
        self.assertAlmostEqual(unit_ball_volume(2), np.pi)
        self.assertAlmostEqual(unit_ball_volume(3), 4 * np.pi / 3)


class SimDomainTests(SimpleTestCase):
    def setUp(self):
        self.interval = SimDomain.interval(1, 15)
        self.shell = SimDomain.shell(3, 1, 10)

    def test_invalid_domains_are_rejected(self):
        with self.assertRaises(ValueError):
            SimDomain.interval(15, 1)
        with self.assertRaises(ValueError):
            SimDomain(1, "shell", 1.0, 10.0)
        with self.assertRaises(ValueError):
            SimDomain(3, "interval", 1.0, 10.0)
        with self.assertRaises(ValueError):
            SimDomain.shell(3, 0.0, 10.0)

    def test_contains(self):
        self.assertTrue(self.interval.contains(np.array([7.0])))
        self.assertFalse(self.shell.contains(np.array([0.0, 0.0, 0.5])))
        self.assertTrue(self.shell.contains(np.array([10.0, 0.0, 0.0])))
        self.assertTrue(self.interval.contains(np.array([15.0 + 5e-10])))

    def test_project_to_boundary(self):
        np.testing.assert_allclose(self.interval.project_to_boundary(np.array([[15.3], [0.4], [7.0]])),
                                   [[15.0], [1.0], [7.0]])
        np.testing.assert_allclose(self.shell.project_to_boundary(np.array([0.0, 0.0, 10.5])), [0.0, 0.0, 10.0])
        np.testing.assert_allclose(self.shell.project_to_boundary(np.array([0.0, 0.5, 0.0])), [0.0, 1.0, 0.0])

    def test_center_projects_along_first_axis(self):
        projected = self.shell.project_to_boundary(np.zeros((1, 3)))
        np.testing.assert_allclose(projected, [[1.0, 0.0, 0.0]])

    def test_projection_lands_on_boundary_and_is_nearest(self):
        rng = np.random.default_rng(3)
        boundary = rng.standard_normal((1000, 3))
        boundary /= np.linalg.norm(boundary, axis=1, keepdims=True)
        boundary[:500] *= 10.0
        for _ in range(20):
            direction = rng.standard_normal(3)
            x = direction / np.linalg.norm(direction) * rng.choice([rng.uniform(0.05, 0.95), rng.uniform(10.1, 14.0)])
            projected = self.shell.project_to_boundary(x)
            self.assertTrue(self.shell.contains(projected))
            r = np.linalg.norm(projected)
            self.assertTrue(np.isclose(r, 1.0) or np.isclose(r, 10.0))
            self.assertLessEqual(np.linalg.norm(x - projected),
                                 np.linalg.norm(x - boundary, axis=1).min() + 1e-12)

    def test_outward_normal(self):
        np.testing.assert_allclose(self.shell.outward_normal(np.array([10.0, 0.0, 0.0])), [1.0, 0.0, 0.0])
        np.testing.assert_allclose(self.shell.outward_normal(np.array([1.0, 0.0, 0.0])), [-1.0, 0.0, 0.0])
        np.testing.assert_allclose(self.interval.outward_normal(np.array([1.0])), [-1.0])
        np.testing.assert_allclose(self.interval.outward_normal(np.array([15.0])), [1.0])

    def test_outward_normal_has_unit_norm(self):
        rng = np.random.default_rng(5)
        points = rng.standard_normal((100, 3))
        points *= (10.0 / np.linalg.norm(points, axis=1))[:, None]
        norms = np.linalg.norm(self.shell.outward_normal(points), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_outward_normal_off_boundary_raises(self):
        with self.assertRaises(NotOnBoundary):
            self.shell.outward_normal(np.array([5.0, 0.0, 0.0]))

    def test_volume(self):
        self.assertAlmostEqual(self.interval.volume(), 14.0)
        self.assertAlmostEqual(self.shell.volume(), 4 * np.pi / 3 * 999, places=8)
        self.assertAlmostEqual(SimDomain.shell(2, 1, 10).volume(), np.pi * 99, places=10)

    def test_bin_measures_add_up_to_volume(self):
        for domain in (self.interval, self.shell, SimDomain.shell(2, 1, 10)):
            edges = domain.default_edges(37)
            self.assertAlmostEqual(domain.bin_measure(edges).sum(), domain.volume(), places=8)

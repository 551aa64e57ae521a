import numpy as np
from django.test import SimpleTestCase

from core.engine import ContractError, evaluate_at, parse
from core.engine.grid import ball_preset, build_preset_domain
from core.engine.hermitian import HermitianMatrix, Xorshift64Star, eig_hermitian, random_hermitian
from core.engine.operators import OperatorSpec
from core.engine.oracle import brute_eig2, quadratic_solution, radial_solution, verify_viscosity
from core.engine.scheme import GridFunction, central_hessian, residual_report
from core.engine.solver import ProblemSpec, solve_lambda1


class ClosedFormTests(SimpleTestCase):

    def test_known_values(self):
        self.assertTrue(np.allclose(brute_eig2(HermitianMatrix([[2, 1], [1, 2]])).values, [1, 3]))
        self.assertTrue(np.allclose(brute_eig2(HermitianMatrix([[0, 1j], [-1j, 0]])).values, [-1, 1]))
        self.assertTrue(np.allclose(brute_eig2(HermitianMatrix.diag(2.5, 2.5)).values, [2.5, 2.5]))
        with self.assertRaises(ContractError):
            brute_eig2(HermitianMatrix.identity(3))

    def test_agrees_with_jacobi(self):
        rng = Xorshift64Star(17)
        worst = 0.0
        for _ in range(10_000):
            H = random_hermitian(2, rng)
            worst = max(worst, float(np.abs(brute_eig2(H).values - eig_hermitian(H).values).max()))
        self.assertLess(worst, 1e-12)


class RadialTests(SimpleTestCase):

    def test_constant_profile(self):
        radial = radial_solution('1', 1.0, 2)
        self.assertTrue(radial.admissible)
        self.assertTrue(np.allclose(radial.dchi, 1.0))
        points = np.array([[0.3, 0.1, -0.2, 0.4], [0.0, 0.0, 0.0, 0.0]])
        self.assertTrue(np.allclose(radial.u(points), np.sum(points ** 2, axis=1), atol=1e-12))

    def test_decreasing_profile(self):
        radial = radial_solution('2 - t', 1.0, 2)
        self.assertTrue(radial.admissible)
        t = np.linspace(0.0, 1.0, 11)
        self.assertTrue(np.allclose(radial.dchi_at(t), 2 - t / 2, atol=1e-10))
        self.assertTrue(np.allclose(radial.chi_at(t), 2 * t - t ** 2 / 4, atol=1e-10))
        self.assertTrue(np.allclose(radial.lambda1_at(t), 2 - t, atol=1e-9))
        self.assertAlmostEqual(radial.ddchi[0], -0.5, places=6)

    def test_round_trip(self):
        radial = radial_solution('exp(0 - t) + 1', 1.0, 1)
        self.assertTrue(radial.admissible)
        tdchi = radial.t * radial.dchi
        recovered = np.gradient(tdchi, radial.t, edge_order=2)
        expected = np.exp(-radial.t) + 1
        self.assertLess(np.abs(recovered - expected).max(), 1e-8)

    def test_increasing_profile_is_flagged(self):
        radial = radial_solution('1 + t', 1.0, 2)
        self.assertFalse(radial.admissible)
        self.assertAlmostEqual(radial.ddchi[-1], 0.5, places=6)

    def test_rejections(self):
        with self.assertRaises(ContractError):
            radial_solution('1 + x1', 1.0, 1)
        with self.assertRaises(ContractError):
            radial_solution('t - 0.5', 1.0, 1)
        with self.assertRaises(ContractError):
            radial_solution('1', 0.0, 1)


class QuadraticTests(SimpleTestCase):

    def test_monge_ampere_value(self):
        expr, f_value = quadratic_solution(HermitianMatrix.diag(1, 4), OperatorSpec('monge_ampere', 2))
        self.assertAlmostEqual(f_value, 2.0)
        self.assertAlmostEqual(float(evaluate_at(expr, np.array([[1.0, 0.0, 0.0, 1.0]]))[0]), 5.0)

    def test_outside_cone(self):
        with self.assertRaises(ContractError):
            quadratic_solution(HermitianMatrix.diag(-1, 4), OperatorSpec('monge_ampere', 2))

    def test_hessian_round_trip(self):
        H0 = HermitianMatrix([[2.0, 0.5 + 0.25j], [0.5 - 0.25j, 3.0]])
        expr, f_value = quadratic_solution(H0, OperatorSpec('lambda1', 2))
        domain = build_preset_domain(ball_preset(2), 0.25)
        u = GridFunction.from_expr(domain, expr)
        origin = int(np.argmin(np.abs(domain.coords).sum(axis=1)))
        self.assertTrue(np.allclose(central_hessian(u, origin).entries, H0.entries, atol=1e-9))
        self.assertAlmostEqual(f_value, eig_hermitian(H0).values[0])

    def test_coordinate_quadratic_is_a_discrete_solution(self):
        expr, f_value = quadratic_solution(HermitianMatrix.diag(1, 4), OperatorSpec('lambda1', 2))
        domain = build_preset_domain(ball_preset(2), 0.25)
        report = residual_report(GridFunction.from_expr(domain, expr), f_value, OperatorSpec('lambda1', 2), 1)
        self.assertLess(report.max_stencil, 1e-10)


class ViscosityTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.disk = build_preset_domain(ball_preset(1), 0.125)

    def test_exact_quadratic_passes(self):
        u = GridFunction.from_expr(self.disk, parse('t', 1))
        report = verify_viscosity(u, 1.0, 1e-8)
        self.assertGreater(report.probed, 0)
        self.assertEqual(report.passed, report.probed)
        self.assertEqual(report.pass_rate, 1.0)
        self.assertGreater(report.skipped, 0)

    def test_wrong_right_hand_side_fails_below(self):
        u = GridFunction.from_expr(self.disk, parse('t', 1))
        report = verify_viscosity(u, 2.0, 1e-8)
        self.assertEqual(report.passed, 0)
        self.assertTrue(all(probe.side == 'below' for probe in report.probes))

    def test_solved_radial_field(self):
        p = ProblemSpec(domain=self.disk, f=parse('2 - t', 1), phi=parse('2*t - t^2/4', 1),
                        operator=OperatorSpec('lambda1', 1))
        solution = solve_lambda1(p).solution
        report = verify_viscosity(solution, p.f_values, 5e-2)
        self.assertGreaterEqual(report.pass_rate, 0.95)

    def test_spike_is_localized(self):
        u = GridFunction.from_expr(self.disk, parse('t', 1))
        origin = int(np.argmin(np.abs(self.disk.coords).sum(axis=1)))
        spiked = u.values.copy()
        spiked[origin] += 0.5
        report = verify_viscosity(u.with_values(spiked), 1.0, 1e-2)
        self.assertIn(origin, report.failures.tolist())
        failing = self.disk.coords[report.failures]
        self.assertLessEqual(np.sqrt((failing ** 2).sum(axis=1)).max(), 2 * self.disk.h + 1e-12)

    def test_kinks_are_excluded(self):
        u = GridFunction.from_expr(self.disk, parse('abs(x1) + t', 1))
        report = verify_viscosity(u, 1.0, 1e-8, fit_cap=1e-6)
        self.assertGreater(report.excluded, 0)
        self.assertEqual(report.summary()['jet_excluded'], report.excluded)

import numpy as np
from django.test import SimpleTestCase

from core.engine import ContractError, parse
from core.engine.grid import ball_preset, build_preset_domain, direction_set
from core.engine.hermitian import eig_hermitian
from core.engine.operators import OperatorSpec
from core.engine.scheme import (
    GridFunction, Stencil, apply_lambda1, central_eligible, central_hessian, directional_value,
    node_solve, residual_report, stencil_hessians,
)


def field(domain, text):
    return GridFunction.from_expr(domain, parse(text, domain.n))


class SchemeTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.disk = build_preset_domain(ball_preset(1), 0.25)
        cls.ball = build_preset_domain(ball_preset(2), 0.25)
        cls.disk_stencil = Stencil(cls.disk, direction_set(1, 1))
        cls.ball_stencil = Stencil(cls.ball, direction_set(2, 1))


class GridFunctionTests(SchemeTestCase):

    def test_rejects_bad_values(self):
        with self.assertRaises(ContractError):
            GridFunction(self.disk, np.zeros(3))
        values = np.zeros(self.disk.size)
        values[7] = np.nan
        with self.assertRaises(ContractError) as ctx:
            GridFunction(self.disk, values)
        self.assertEqual(ctx.exception.node, 7)

    def test_missing_boundary_datum(self):
        u = GridFunction(self.disk, np.zeros(self.disk.size))
        with self.assertRaises(ContractError):
            self.disk_stencil.extend(u)

    def test_shift_moves_boundary_datum(self):
        u = field(self.disk, 't').shifted(0.5)
        points = np.array([[1.0, 0.0]])
        self.assertAlmostEqual(u.boundary_at(points)[0], 1.5)

    def test_callable_boundary(self):
        u = GridFunction(self.disk, np.zeros(self.disk.size), boundary=lambda p: np.full(len(p), 3.0))
        self.assertEqual(u.boundary_at(np.zeros((2, 2))).tolist(), [3.0, 3.0])


class StencilTests(SchemeTestCase):

    def test_exact_on_quadratics_with_cut_arms(self):
        result = apply_lambda1(field(self.disk, '3*t + x1 - 2*y1 + 5'), self.disk_stencil)
        self.assertTrue(np.allclose(result.values, 3.0, atol=1e-9))

    def test_least_eigenvalue_of_quadratics(self):
        cases = {
            'x1^2 + y1^2 + 4*(x2^2 + y2^2)': 1.0,
            'x1*x2 + y1*y2': -0.5,
            '2*(x1^2 + y1^2) + 2*(x2^2 + y2^2) + x1*x2 + y1*y2': 1.5,
        }
        for text, expected in cases.items():
            with self.subTest(text=text):
                result = apply_lambda1(field(self.ball, text), self.ball_stencil)
                self.assertTrue(np.allclose(result.values, expected, atol=1e-8))

    def test_width_argument_builds_the_stencil(self):
        u = field(self.disk, 't')
        self.assertTrue(np.allclose(apply_lambda1(u, 1).values, apply_lambda1(u, self.disk_stencil).values))

    def test_monotone_in_neighbors(self):
        u = field(self.ball, 'x1^2 + y1^2 + 4*(x2^2 + y2^2)')
        base = apply_lambda1(u, self.ball_stencil).values
        rng = np.random.default_rng(0)
        for j in rng.choice(self.ball.size, 10, replace=False):
            raised = u.values.copy()
            raised[j] += 0.1
            bumped = apply_lambda1(u.with_values(raised), self.ball_stencil).values
            others = np.arange(self.ball.size) != j
            self.assertTrue(np.all(bumped[others] >= base[others] - 1e-12))
            self.assertLess(bumped[j], base[j])

    def test_single_arm_estimate_matches_stencil(self):
        u = field(self.ball, 'exp(x1) * cos(y2) + t^2')
        E = self.ball_stencil.directional(self.ball_stencil.extend(u))
        dirs = self.ball_stencil.directions
        for node in (0, self.ball.size // 2, self.ball.size - 1):
            for d, w in enumerate(dirs):
                estimate = directional_value(u, node, self.ball.arms(node, w))
                self.assertAlmostEqual(estimate.value, E[node, d], delta=1e-6 * (1 + abs(E[node, d])))
                self.assertAlmostEqual(estimate.center, self.ball_stencil.cen[node, d],
                                       delta=1e-8 * self.ball_stencil.cen[node, d])

    def test_node_solve_reproduces_solution(self):
        u = field(self.disk, 't')
        for node in range(self.disk.size):
            self.assertAlmostEqual(node_solve(u, node, 1.0, self.disk_stencil), u.values[node], delta=1e-9)
        with self.assertRaises(ContractError):
            node_solve(u, -1, 1.0, self.disk_stencil)

    def test_quadratic_shift_identity(self):
        u = field(self.ball, 'exp(x1) * cos(y2) + t^2')
        stencil = self.ball_stencil
        base = stencil.apply(stencil.extend(u))
        full = stencil.full_nodes
        self.assertTrue(full.any())
        for eps in (1e-2, 1e-1):
            shifted = u.minus_quadratic(eps, self.ball.coords[3])
            values = stencil.apply(stencil.extend(shifted))
            self.assertLess(np.abs(values - (base - 0.5 * eps))[full].max(), 1e-12 * 16)


class HessianTests(SchemeTestCase):

    def test_stencil_hessian_of_quadratic(self):
        u = field(self.ball, '2*(x1^2 + y1^2) + 3*(x2^2 + y2^2) + x1*x2 + y1*y2 + 0.5*(x1*y2 - y1*x2)')
        H = stencil_hessians(u, self.ball_stencil)
        expected = np.array([[2.0, 0.5 + 0.25j], [0.5 - 0.25j, 3.0]])
        self.assertTrue(np.allclose(H, expected[None], atol=1e-8))

    def test_central_hessian(self):
        u = field(self.ball, '2*(x1^2 + y1^2) + 3*(x2^2 + y2^2) + x1*x2 + y1*y2')
        origin = int(np.argmin(np.abs(self.ball.coords).sum(axis=1)))
        H = central_hessian(u, origin)
        self.assertTrue(np.allclose(H.entries, [[2.0, 0.5], [0.5, 3.0]], atol=1e-10))
        edge = int(np.argmax(np.sum(self.ball.coords ** 2, axis=1)))
        self.assertFalse(central_eligible(self.ball)[edge])
        with self.assertRaises(ContractError):
            central_hessian(u, edge)

    def test_central_hessian_one_dimension(self):
        u = field(self.disk, 'x1^2 + 3*y1^2')
        origin = int(np.argmin(np.abs(self.disk.coords).sum(axis=1)))
        self.assertAlmostEqual(eig_hermitian(central_hessian(u, origin)).values[0], 2.0)


class ResidualTests(SchemeTestCase):

    def test_exact_solution_is_both(self):
        report = residual_report(field(self.disk, 't'), 1.0, OperatorSpec('lambda1', 1), self.disk_stencil)
        self.assertTrue(report.subsolution)
        self.assertTrue(report.supersolution)
        self.assertLess(report.max_stencil, 1e-9)
        self.assertLess(report.max_spectral, 1e-9)
        self.assertGreater(report.eligible, 0)
        summary = report.summary()
        self.assertEqual(summary['operator'], 'lambda1')
        self.assertEqual(summary['subsolution_failures'], 0)

    def test_verdicts_follow_the_sign(self):
        u = field(self.disk, 't')
        above = residual_report(u, 2.0, OperatorSpec('lambda1', 1), self.disk_stencil)
        self.assertFalse(above.subsolution)
        self.assertTrue(above.supersolution)
        self.assertIsNotNone(above.worst_sub_node)
        below = residual_report(u, 0.5, OperatorSpec('lambda1', 1), self.disk_stencil)
        self.assertTrue(below.subsolution)
        self.assertFalse(below.supersolution)
        self.assertEqual(below.super_failures.size, self.disk.size)

    def test_general_operator(self):
        u = field(self.ball, 'x1^2 + y1^2 + 4*(x2^2 + y2^2)')
        report = residual_report(u, 2.0, OperatorSpec('monge_ampere', 2), self.ball_stencil)
        self.assertLess(report.max_stencil, 1e-7)
        self.assertLess(report.max_spectral, 1e-9)
        self.assertTrue(report.subsolution and report.supersolution)

    def test_outside_cone_is_never_a_subsolution(self):
        u = field(self.ball, '-(x1^2 + y1^2) + x2^2 + y2^2')
        report = residual_report(u, 1.0, OperatorSpec('monge_ampere', 2), self.ball_stencil)
        self.assertFalse(report.subsolution)
        self.assertTrue(report.supersolution)
        self.assertTrue(np.all(np.isnan(report.stencil_residual)))
